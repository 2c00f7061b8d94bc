/*
 *   Copyright 2026 The pcsl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "pcsl/ablation.hpp"
#include "pcsl/affinity.hpp"
#include "pcsl/checkpoint.hpp"
#include "pcsl/config.hpp"
#include "pcsl/error.hpp"
#include "pcsl/evalmetrics.hpp"
#include "pcsl/fileio.hpp"
#include "pcsl/trainer.hpp"
#include "pcsl/version.hpp"

namespace fs = std::filesystem;

namespace pcsl::cli {

int exit_code_for_kind(const std::string& kind) {
  static const std::map<std::string, int> codes{
      {"config", kConfig},   {"io", kIo},           {"parse", kParse},     {"version", kVersion},
      {"dimension", kDimension}, {"contract", kContract}, {"numeric", kNumeric},
  };
  const auto it = codes.find(kind);
  return it == codes.end() ? kInternal : it->second;
}

namespace {

template <typename T>
T spec_value(const nlohmann::json& v, const std::string& key) {
  const bool ok = std::is_integral_v<T> ? v.is_number_integer() : v.is_number();
  if (!ok) throw ConfigError("key '" + key + "' expects " + (std::is_integral_v<T> ? "an integer" : "a number"));
  if (std::is_unsigned_v<T> && !v.is_number_unsigned() && v.get<long long>() < 0)
    throw ConfigError("key '" + key + "' expects a nonnegative integer");
  return v.get<T>();
}

nlohmann::json parse_override_value(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error&) {
    return text;
  }
}

std::pair<std::string, std::string> split_assignment(const std::string& kv) {
  const auto eq = kv.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' is not of the form key=value");
  return {kv.substr(0, eq), kv.substr(eq + 1)};
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  write_atomically(path, [&](std::ostream& out) { out << text; });
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir.string() + "'");
}

/// What every run directory records besides the subcommand's own outputs.
void write_run_record(const fs::path& dir, const std::string& command, std::uint64_t seed,
                      const std::vector<std::string>& args) {
  write_json(dir / "run.json", {{"version", pcsl::kVersion}, {"command", command}, {"seed", seed}, {"argv", args}});
}

/// Defaults < config file < --set overrides < --seed.
TrainConfig effective_config(const std::string& file, const std::vector<std::string>& sets,
                             std::optional<std::uint64_t> seed) {
  TrainConfig c;
  if (!file.empty()) c = config_from_json(read_json(file), c);
  for (const auto& kv : sets) {
    const auto [k, v] = split_assignment(kv);
    apply_override(c, k, v);
  }
  if (seed) c.seed = *seed;
  c.validate();
  return c;
}

struct DataPaths {
  std::string dir, train, query, gallery;

  void add_to(CLI::App* app, bool need_train, bool need_eval) {
    app->add_option("--data", dir, "Directory holding train.txt, query.txt and gallery.txt");
    if (need_train) app->add_option("--train", train, "Training dataset file");
    if (need_eval) {
      app->add_option("--query", query, "Query dataset file");
      app->add_option("--gallery", gallery, "Gallery dataset file");
    }
  }
  std::string resolve(const std::string& explicit_path, const char* name) const {
    if (!explicit_path.empty()) return explicit_path;
    if (!dir.empty()) return (fs::path(dir) / (std::string(name) + ".txt")).string();
    return {};
  }
  std::string train_path() const { return resolve(train, "train"); }
  std::string query_path() const { return resolve(query, "query"); }
  std::string gallery_path() const { return resolve(gallery, "gallery"); }
};

Dataset load_required(const std::string& path, const char* what) {
  if (path.empty()) throw ConfigError(std::string("missing ") + what + " dataset (use --" + what + " or --data)");
  return load_dataset(path);
}

}  // namespace

nlohmann::json to_json(const SynthSpec& s) {
  return {{"n_identities", s.n_identities},
          {"n_test_identities", s.n_test_identities},
          {"n_cameras", s.n_cameras},
          {"d_latent", s.d_latent},
          {"d_in", s.d_in},
          {"images_per_person", s.images_per_person},
          {"camera_appearance_prob", s.camera_appearance_prob},
          {"camera_transform_scale", s.camera_transform_scale},
          {"noise_sigma", s.noise_sigma},
          {"seed", s.seed}};
}

SynthSpec spec_from_json(const nlohmann::json& j, SynthSpec s) {
  if (!j.is_object()) throw ConfigError("dataset spec must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "n_identities") s.n_identities = spec_value<int>(v, key);
    else if (key == "n_test_identities") s.n_test_identities = spec_value<int>(v, key);
    else if (key == "n_cameras") s.n_cameras = spec_value<int>(v, key);
    else if (key == "d_latent") s.d_latent = spec_value<int>(v, key);
    else if (key == "d_in") s.d_in = spec_value<int>(v, key);
    else if (key == "images_per_person") s.images_per_person = spec_value<int>(v, key);
    else if (key == "camera_appearance_prob") s.camera_appearance_prob = spec_value<double>(v, key);
    else if (key == "camera_transform_scale") s.camera_transform_scale = spec_value<double>(v, key);
    else if (key == "noise_sigma") s.noise_sigma = spec_value<double>(v, key);
    else if (key == "seed") s.seed = spec_value<std::uint64_t>(v, key);
    else throw ConfigError("unknown dataset spec key '" + key + "'");
  }
  return s;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-camera soft-label learning on synthetic multi-camera data"};
  app.name(args.empty() ? "pcsl" : args[0]);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pcsl::kVersion));

  std::string config_file, out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  auto add_config_options = [&](CLI::App* sub) {
    sub->add_option("--config", config_file, "JSON file of training settings")->check(CLI::ExistingFile);
    sub->add_option("--set", sets, "Override one setting, key=value (repeatable)");
    sub->add_option("--seed", seed, "Random seed (overrides the config)");
  };

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic train/query/gallery corpus");
  std::string spec_file;
  gen->add_option("--out", out_dir, "Output directory")->required();
  gen->add_option("--spec", spec_file, "JSON file of generator settings")->check(CLI::ExistingFile);
  gen->add_option("--set", sets, "Override one generator setting, key=value (repeatable)");
  gen->add_option("--seed", seed, "Generator seed");

  // train
  auto* tr = app.add_subcommand("train", "Train a model and write its log and checkpoint");
  DataPaths train_data;
  int checkpoint_every = 0;
  bool dump_affinity = false, no_timing = false;
  train_data.add_to(tr, true, true);
  tr->add_option("--out", out_dir, "Output directory")->required();
  add_config_options(tr);
  tr->add_option("--checkpoint-every", checkpoint_every, "Also checkpoint every N epochs")->check(CLI::NonNegativeNumber);
  tr->add_flag("--dump-affinity", dump_affinity, "Write the last affinity matrix as sparse triplets");
  tr->add_flag("--no-timing", no_timing, "Record wall_ms as 0 so reruns give byte-identical logs");

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a query/gallery split");
  DataPaths eval_data;
  std::string checkpoint_path, result_path;
  eval_data.add_to(ev, false, true);
  ev->add_option("--checkpoint", checkpoint_path, "Checkpoint file")->required();
  ev->add_option("--out", result_path, "Write the result as JSON to this file");

  // ablate
  auto* ab = app.add_subcommand("ablate", "Train every setting along one ablation axis");
  DataPaths ablate_data;
  std::string axis_name;
  std::vector<std::uint64_t> seeds;
  ablate_data.add_to(ab, true, true);
  ab->add_option("--axis", axis_name,
                 "inter_mode, mining_mode, mask_same_camera, positive_sampling, weighting_mode, lambda_sweep, k_sweep")
      ->required();
  ab->add_option("--out", out_dir, "Output directory")->required();
  ab->add_option("--seeds", seeds, "Training seeds, comma separated")->delimiter(',');
  add_config_options(ab);

  // export-metrics
  auto* ex = app.add_subcommand("export-metrics", "Re-serialise a train log as CSV or JSON");
  std::string log_path, format = "csv", export_path;
  ex->add_option("--log", log_path, "trainlog.json written by train")->required();
  ex->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  ex->add_option("--out", export_path, "Output file (stdout when omitted)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return kOk;
    }
    err << "error: usage: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*gen) {
      SynthSpec spec;
      if (!spec_file.empty()) spec = spec_from_json(read_json(spec_file), spec);
      for (const auto& kv : sets) {
        const auto [k, v] = split_assignment(kv);
        spec = spec_from_json({{k, parse_override_value(v)}}, spec);
      }
      if (seed) spec.seed = *seed;
      const auto corpus = generate_synthetic(spec);
      ensure_dir(out_dir);
      const fs::path dir(out_dir);
      save_dataset(corpus.train, dir / "train.txt");
      save_dataset(corpus.query, dir / "query.txt");
      save_dataset(corpus.gallery, dir / "gallery.txt");
      write_json(dir / "spec.json", to_json(spec));
      write_run_record(dir, "gen", spec.seed, args);
      out << "wrote " << corpus.train.size() << " train, " << corpus.query.size() << " query and "
          << corpus.gallery.size() << " gallery samples to " << out_dir << "\n";
      return kOk;
    }

    if (*tr) {
      const auto cfg = effective_config(config_file, sets, seed);
      const auto train_set = load_required(train_data.train_path(), "train");
      std::optional<Dataset> query, gallery;
      if (!train_data.query_path().empty() || !train_data.gallery_path().empty()) {
        query = load_required(train_data.query_path(), "query");
        gallery = load_required(train_data.gallery_path(), "gallery");
      }
      ensure_dir(out_dir);
      const fs::path dir(out_dir);
      TrainHooks hooks;
      hooks.record_wall_time = !no_timing;
      if (checkpoint_every > 0) {
        ensure_dir(dir / "checkpoints");
        hooks.on_epoch_end = [&](const TrainState& state, const EpochRecord& rec) {
          if (rec.epoch % checkpoint_every != 0) return;
          char name[32];
          std::snprintf(name, sizeof name, "epoch-%04d.ckpt", rec.epoch);
          save_checkpoint(state.checkpoint(cfg.optimizer), dir / "checkpoints" / name);
        };
      }
      std::optional<Validation> validation;
      if (query) validation = Validation{&*query, &*gallery};
      const auto result = train(train_set, cfg, validation, hooks);

      write_json(dir / "config.json", to_json(cfg));
      write_run_record(dir, "train", cfg.seed, args);
      write_text(dir / "trainlog.csv", trainlog_to_csv(result.log));
      write_json(dir / "trainlog.json", trainlog_to_json(result.log));
      save_checkpoint(result.state.checkpoint(cfg.optimizer), dir / "model.ckpt");
      if (dump_affinity && result.last_affinity) write_text(dir / "affinity.txt", affinity_triplets(*result.last_affinity));
      if (query) {
        const auto r = evaluate(result.state.model, *query, *gallery);
        write_json(dir / "metrics.json", pcsl::to_json(r));
        out << to_text(r);
      }
      out << "trained " << cfg.epochs << " epochs; outputs in " << out_dir << "\n";
      return kOk;
    }

    if (*ev) {
      const auto ckpt = load_checkpoint(checkpoint_path);
      const auto query = load_required(eval_data.query_path(), "query");
      const auto gallery = load_required(eval_data.gallery_path(), "gallery");
      const auto r = evaluate(ckpt.model, query, gallery);
      if (!result_path.empty()) write_json(result_path, pcsl::to_json(r));
      out << to_text(r);
      return kOk;
    }

    if (*ab) {
      const auto cfg = effective_config(config_file, sets, seed);
      const auto axis = axis_from_string(axis_name);
      const auto train_set = load_required(ablate_data.train_path(), "train");
      const auto query = load_required(ablate_data.query_path(), "query");
      const auto gallery = load_required(ablate_data.gallery_path(), "gallery");
      if (seeds.empty()) seeds.assign(kBenchmarkSeeds.begin(), kBenchmarkSeeds.end());
      const auto table = run_ablation(train_set, query, gallery, cfg, axis, seeds);
      ensure_dir(fs::path(out_dir) / "logs");
      const fs::path dir(out_dir);
      write_json(dir / "config.json", to_json(cfg));
      write_run_record(dir, "ablate", cfg.seed, args);
      write_text(dir / "table.txt", table.to_text());
      write_json(dir / "table.json", table.to_json());
      for (std::size_t r = 0; r < table.rows.size(); ++r)
        for (std::size_t s = 0; s < table.rows[r].seeds.size(); ++s)
          write_text(dir / "logs" / ("row" + std::to_string(r) + "-seed" + std::to_string(table.rows[r].seeds[s]) + ".csv"),
                     trainlog_to_csv(table.rows[r].logs[s]));
      out << table.to_text();
      return kOk;
    }

    if (*ex) {
      const auto log = trainlog_from_json(read_json(log_path));
      const std::string text = format == "csv" ? trainlog_to_csv(log) : trainlog_to_json(log).dump(2) + "\n";
      if (export_path.empty()) out << text;
      else write_text(export_path, text);
      return kOk;
    }
  } catch (const Error& e) {
    std::string msg = e.what();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    err << "error: " << e.kind() << ": " << msg << "\n";
    return exit_code_for_kind(e.kind());
  } catch (const std::exception& e) {
    err << "error: internal: " << e.what() << "\n";
    return kInternal;
  }
  return kUsage;
}

}  // namespace pcsl::cli
