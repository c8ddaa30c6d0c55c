// Copyright 2026 The iclr Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// iclr: ingest datasets, fill caches, and run evaluations, ablations and
// diversity sweeps through the C library.

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "iclr/iclr.h"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

enum Exit : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitInput = 2,
  kExitPartial = 3,
  kExitBackend = 4,
};

struct Failure {
  iclr_status status;
  std::string message;
};

void check(iclr_status st) {
  if (st != ICLR_OK) throw Failure{st, iclr_last_error()};
}

void input_error(const std::string& msg) { throw Failure{ICLR_INVALID_ARGUMENT, msg}; }

int exit_code_for(iclr_status st) {
  switch (st) {
    case ICLR_INVALID_ARGUMENT:
    case ICLR_MALFORMED_RECORD:
    case ICLR_IO_ERROR:
    case ICLR_MISSING_EMBEDDING:
    case ICLR_MISSING_BIAS:
    case ICLR_MISSING_FIXED_IDS:
    case ICLR_EMBEDDING_SOURCE_ERROR:
    case ICLR_DIMENSION_MISMATCH:
    case ICLR_ZERO_VECTOR:
      return kExitInput;
    case ICLR_BACKEND_UNAVAILABLE:
    case ICLR_BACKEND_REJECTED:
    case ICLR_TOKENIZATION_MISMATCH:
      return kExitBackend;
    default:
      return kExitOther;
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
  T** out() { return &p; }
  T* get() const { return p; }
};

std::string take(char* s) {
  std::string out(s ? s : "");
  iclr_string_free(s);
  return out;
}

std::string file_sha256(const fs::path& p) {
  char* s = nullptr;
  check(iclr_file_sha256(p.c_str(), &s));
  return take(s);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) input_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Failure{ICLR_IO_ERROR, "cannot write " + p.string()};
  out << text;
}

struct Options {
  std::string dataset;
  std::string format;
  std::string cache_dir;
  std::string out;
  std::string backend = "mock";
  std::string model;
  std::string endpoint;
  std::string credential_env = "ICLR_API_KEY";
  std::size_t max_concurrency = 4;
  std::string embeddings;
  std::string embed_endpoint;
  std::string embed_model;
  std::string export_missing;
  std::size_t k = 6;
  double lambda_d = 0.75;
  double lambda_b = 0.95;
  std::string method = "Rel+Div+Bias";
  std::string methods;
  std::string grid = "0,0.25,0.5,0.75,1";
  std::size_t concurrency = 4;
  std::uint64_t seed = 0;
  std::string template_path;
  std::string fixed_demos;
  double mock_fallback = -1.0;
  std::string mock_fixtures;
  bool rescale_bias = false;
  bool svg = true;
};

struct Context {
  Options o;
  std::string command;
  Handle<iclr_dataset, iclr_dataset_free> ds;
  Handle<iclr_backend, iclr_backend_free> backend;
  Handle<iclr_workspace, iclr_workspace_free> ws;
  std::string dataset_hash;
  fs::path cache_dir;
  ordered_json inputs = ordered_json::object();
};

void load_dataset(Context& c) {
  if (c.o.dataset.empty()) input_error("--dataset is required");
  const fs::path p(c.o.dataset);
  if (!fs::exists(p)) throw Failure{ICLR_IO_ERROR, "dataset not found: " + p.string()};
  check(iclr_dataset_load(p.c_str(), c.o.format.empty() ? nullptr : c.o.format.c_str(),
                          c.ds.out()));
  char* h = nullptr;
  check(iclr_dataset_hash(c.ds.get(), &h));
  c.dataset_hash = take(h);
  c.inputs["dataset"] = {{"path", p.string()},
                         {"sha256", file_sha256(p)},
                         {"canonical_sha256", c.dataset_hash}};
}

std::string model_name(const Options& o) {
  if (!o.model.empty()) return o.model;
  if (o.backend == "mock") return "mock";
  return "";
}

ordered_json http_config(const Options& o, const std::string& endpoint,
                         const std::string& model) {
  ordered_json j;
  j["endpoint"] = endpoint;
  j["model"] = model;
  j["credential_env"] = o.credential_env;
  j["max_concurrency"] = o.max_concurrency;
  return j;
}

void open_backend(Context& c) {
  const Options& o = c.o;
  if (o.backend == "mock") {
    check(iclr_backend_create_mock(o.mock_fallback, c.backend.out()));
    if (!o.mock_fixtures.empty()) {
      const fs::path p(o.mock_fixtures);
      if (!fs::exists(p)) input_error("mock fixtures not found: " + p.string());
      std::ifstream in(p);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
          const auto j = nlohmann::json::parse(line);
          const auto lp = j.at("logprobs").get<std::vector<double>>();
          check(iclr_backend_mock_add_fixture(
              c.backend.get(), j.at("prefix").get<std::string>().c_str(),
              j.at("target").get<std::string>().c_str(), lp.data(), lp.size()));
        } catch (const nlohmann::json::exception& e) {
          throw Failure{ICLR_MALFORMED_RECORD,
                        p.string() + ": line " + std::to_string(lineno) + ": " + e.what()};
        }
      }
      c.inputs["mock_fixtures"] = {{"path", p.string()}, {"sha256", file_sha256(p)}};
    }
  } else if (o.backend == "http") {
    if (o.endpoint.empty() || o.model.empty()) {
      input_error("--backend http requires --endpoint and --model");
    }
    check(iclr_backend_create_http(http_config(o, o.endpoint, o.model).dump().c_str(),
                                   c.backend.out()));
  } else {
    input_error("unknown backend '" + o.backend + "' (expected mock or http)");
  }
}

void open_workspace(Context& c, const std::string& model) {
  c.cache_dir = c.o.cache_dir.empty() ? fs::path("iclr-cache") / c.dataset_hash.substr(0, 16)
                                      : fs::path(c.o.cache_dir);
  check(iclr_workspace_open(c.cache_dir.c_str(), model.c_str(), c.ws.out()));
}

void fill_embeddings(Context& c) {
  size_t calls = 0;
  if (!c.o.embeddings.empty()) {
    const fs::path p(c.o.embeddings);
    if (!fs::exists(p)) throw Failure{ICLR_IO_ERROR, "embeddings not found: " + p.string()};
    c.inputs["embeddings"] = {{"path", p.string()}, {"sha256", file_sha256(p)}};
    check(iclr_workspace_embed_from_file(c.ws.get(), c.ds.get(), p.c_str(), &calls));
  } else if (!c.o.embed_endpoint.empty()) {
    if (c.o.embed_model.empty()) input_error("--embed-endpoint requires --embed-model");
    const auto cfg = http_config(c.o, c.o.embed_endpoint, c.o.embed_model);
    c.inputs["embedding_endpoint"] = {{"endpoint", c.o.embed_endpoint},
                                      {"model", c.o.embed_model}};
    check(iclr_workspace_embed_http(c.ws.get(), c.ds.get(), cfg.dump().c_str(), &calls));
  }
  if (calls > 0) std::cerr << "embedded " << calls << " texts\n";
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

std::optional<std::string> template_json(Context& c) {
  if (c.o.template_path.empty()) return std::nullopt;
  const fs::path p(c.o.template_path);
  if (!fs::exists(p)) throw Failure{ICLR_IO_ERROR, "template not found: " + p.string()};
  c.inputs["template"] = {{"path", p.string()}, {"sha256", file_sha256(p)}};
  return slurp(p);
}

ordered_json fixed_demos(Context& c) {
  ordered_json arr = ordered_json::array();
  if (c.o.fixed_demos.empty()) {
    char* raw = nullptr;
    check(iclr_default_primer_json(&raw));
    arr = ordered_json::parse(raw);
    iclr_string_free(raw);
    return arr;
  }
  const fs::path p(c.o.fixed_demos);
  if (!fs::exists(p)) throw Failure{ICLR_IO_ERROR, "fixed demos not found: " + p.string()};
  c.inputs["fixed_demos"] = {{"path", p.string()}, {"sha256", file_sha256(p)}};
  std::ifstream in(p);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      arr.push_back({{"question", j.at("question").get<std::string>()},
                     {"answer", j.at("answer").get<std::string>()}});
    } catch (const nlohmann::json::exception& e) {
      throw Failure{ICLR_MALFORMED_RECORD,
                    p.string() + ": line " + std::to_string(lineno) + ": " + e.what()};
    }
  }
  return arr;
}

ordered_json run_config(Context& c) {
  ordered_json j;
  j["dataset_id"] = c.dataset_hash;
  j["method"] = c.o.method;
  j["k"] = c.o.k;
  j["lambda_d"] = c.o.lambda_d;
  j["lambda_b"] = c.o.lambda_b;
  j["rescale_bias"] = c.o.rescale_bias;
  j["concurrency"] = c.o.concurrency;
  j["seed"] = c.o.seed;
  if (auto t = template_json(c)) j["template"] = nlohmann::json::parse(*t);
  j["fixed_demos"] = fixed_demos(c);
  return j;
}

void write_manifest(const Context& c, const fs::path& out_dir, const ordered_json& config) {
  ordered_json m;
  m["command"] = c.command;
  m["version"] = iclr_version();
  m["backend"] = {{"kind", c.o.backend}, {"model", model_name(c.o)}};
  if (c.o.backend == "http") {
    m["backend"]["endpoint"] = c.o.endpoint;
    m["backend"]["credential_env"] = c.o.credential_env;
    m["backend"]["max_concurrency"] = c.o.max_concurrency;
  } else {
    m["backend"]["mock_fallback"] = c.o.mock_fallback;
  }
  m["cache_dir"] = c.cache_dir.string();
  m["config"] = config;
  m["inputs"] = c.inputs;
  write_text(out_dir / "manifest.json", m.dump(2) + "\n");
}

fs::path out_dir(const Context& c) {
  if (c.o.out.empty()) return fs::path("iclr-out") / c.command;
  return fs::path(c.o.out);
}

void compute_biases_if_needed(Context& c, bool needed) {
  if (!needed) return;
  const auto tmpl = template_json(c);
  size_t calls = 0;
  check(iclr_workspace_compute_biases(c.ws.get(), c.ds.get(), c.backend.get(),
                                      tmpl ? tmpl->c_str() : nullptr, c.o.concurrency,
                                      &calls));
  if (calls > 0) std::cerr << "scored " << calls << " demonstration biases\n";
}

int finish_report(Context& c, iclr_report* report, const ordered_json& config) {
  const fs::path dir = out_dir(c);
  char* s = nullptr;
  check(iclr_report_json(report, &s));
  write_text(dir / "report.json", take(s) + "\n");
  check(iclr_report_markdown(report, &s));
  const std::string md = take(s);
  write_text(dir / "report.md", md);
  if (c.command == "eval") {
    check(iclr_report_contexts_json(report, &s));
    write_text(dir / "contexts.json", take(s) + "\n");
  }
  write_manifest(c, dir, config);
  std::cout << md;

  size_t hits = 0, misses = 0;
  check(iclr_workspace_cache_stats(c.ws.get(), &hits, &misses));
  std::cerr << "score cache: " << hits << " hits, " << misses << " misses\n";

  size_t dropped = 0;
  check(iclr_report_dropped(report, &dropped));
  if (dropped > 0) {
    check(iclr_report_json(report, &s));
    const auto j = nlohmann::json::parse(take(s));
    auto log_ids = [](const nlohmann::json& r) {
      for (const auto& id : r.at("dropped_ids")) {
        std::cerr << "dropped example " << id.get<std::string>() << " (" << r.at("method").get<std::string>()
                  << ")\n";
      }
    };
    if (j.contains("reports")) {
      for (const auto& r : j["reports"]) log_ids(r);
    } else {
      log_ids(j);
    }
    std::cerr << dropped << " example(s) dropped after backend failures\n";
    return kExitPartial;
  }
  return kExitOk;
}

int cmd_ingest(Context& c) {
  load_dataset(c);
  size_t n = 0, p = 0, t = 0;
  check(iclr_dataset_counts(c.ds.get(), &n, &p, &t));
  if (!c.o.out.empty()) {
    char* s = nullptr;
    check(iclr_dataset_to_jsonl(c.ds.get(), &s));
    write_text(c.o.out, take(s));
  }
  std::cout << n << " examples, " << p << " pairs, " << t << " triplets\n";
  return kExitOk;
}

int cmd_embed(Context& c) {
  load_dataset(c);
  open_workspace(c, model_name(c.o).empty() ? "embeddings" : model_name(c.o));
  if (c.o.embeddings.empty() && c.o.embed_endpoint.empty() && c.o.export_missing.empty()) {
    input_error("embed needs --embeddings, --embed-endpoint or --export-missing");
  }
  fill_embeddings(c);
  if (!c.o.export_missing.empty()) {
    size_t n = 0;
    check(iclr_workspace_export_missing(c.ws.get(), c.ds.get(), c.o.export_missing.c_str(),
                                        &n));
    std::cout << n << " texts without embeddings written to " << c.o.export_missing << "\n";
  }
  if (!c.o.out.empty()) write_manifest(c, out_dir(c), ordered_json::object());
  return kExitOk;
}

int cmd_bias(Context& c) {
  load_dataset(c);
  open_backend(c);
  open_workspace(c, model_name(c.o));
  compute_biases_if_needed(c, true);
  if (!c.o.out.empty()) write_manifest(c, out_dir(c), ordered_json::object());
  return kExitOk;
}

int cmd_eval(Context& c) {
  load_dataset(c);
  open_backend(c);
  open_workspace(c, model_name(c.o));
  fill_embeddings(c);
  const auto config = run_config(c);
  compute_biases_if_needed(c, lower(c.o.method).find("bias") != std::string::npos);
  Handle<iclr_report, iclr_report_free> report;
  check(iclr_evaluate(c.ws.get(), c.ds.get(), c.backend.get(), config.dump().c_str(),
                      report.out()));
  return finish_report(c, report.get(), config);
}

int cmd_ablate(Context& c) {
  load_dataset(c);
  open_backend(c);
  open_workspace(c, model_name(c.o));
  fill_embeddings(c);
  auto config = run_config(c);
  config.erase("method");
  config["methods"] = c.o.methods.empty() ? "Fix,Bias,Rel,Rel+Bias,Rel+Div,Rel+Div+Bias"
                                          : c.o.methods;
  compute_biases_if_needed(c, c.o.methods.empty() ||
                                  lower(c.o.methods).find("bias") != std::string::npos);
  Handle<iclr_report, iclr_report_free> report;
  check(iclr_ablate(c.ws.get(), c.ds.get(), c.backend.get(), config.dump().c_str(),
                    config["methods"].get<std::string>().c_str(), report.out()));
  return finish_report(c, report.get(), config);
}

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
      grid.push_back(v);
    } catch (const std::exception&) {
      input_error("--grid: cannot parse '" + item + "'");
    }
  }
  if (grid.empty()) input_error("--grid is empty");
  return grid;
}

int cmd_sweep(Context& c) {
  const auto grid = parse_grid(c.o.grid);
  load_dataset(c);
  open_backend(c);
  open_workspace(c, model_name(c.o));
  fill_embeddings(c);
  auto config = run_config(c);
  config["method"] = "Rel+Div+Bias";
  config["grid"] = grid;
  compute_biases_if_needed(c, true);
  Handle<iclr_sweep, iclr_sweep_free> sweep;
  check(iclr_sweep_run(c.ws.get(), c.ds.get(), c.backend.get(), config.dump().c_str(),
                       grid.data(), grid.size(), sweep.out()));
  const fs::path dir = out_dir(c);
  char* s = nullptr;
  check(iclr_sweep_csv(sweep.get(), &s));
  const std::string csv = take(s);
  write_text(dir / "sweep.csv", csv);
  if (c.o.svg) {
    check(iclr_sweep_svg(sweep.get(), &s));
    write_text(dir / "sweep.svg", take(s));
  }
  write_manifest(c, dir, config);
  std::cout << csv;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Diversity- and quality-aware demonstration retrieval and evaluation"};
  app.require_subcommand(1);
  Context c;
  Options& o = c.o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--dataset", o.dataset, "Dataset (JSONL or TruthfulQA CSV)");
    sub->add_option("--format", o.format, "jsonl or truthfulqa-csv (default: by extension)");
    sub->add_option("--cache-dir", o.cache_dir,
                    "Cache directory (default: iclr-cache/<dataset hash>)");
    sub->add_option("--out", o.out, "Output path or directory");
  };
  auto backend_opts = [&](CLI::App* sub) {
    sub->add_option("--backend", o.backend, "mock or http")->capture_default_str();
    sub->add_option("--model", o.model, "Model name");
    sub->add_option("--endpoint", o.endpoint, "Completions endpoint URL");
    sub->add_option("--credential-env", o.credential_env,
                    "Environment variable holding the API key")
        ->capture_default_str();
    sub->add_option("--max-in-flight", o.max_concurrency, "Concurrent HTTP requests")
        ->capture_default_str();
    sub->add_option("--mock-fallback", o.mock_fallback,
                    "Mock log-probability per whitespace token")
        ->capture_default_str();
    sub->add_option("--mock-fixtures", o.mock_fixtures,
                    "JSONL of {prefix, target, logprobs} for the mock backend");
    sub->add_option("--concurrency", o.concurrency, "Scoring workers")->capture_default_str();
    sub->add_option("--template", o.template_path, "Prompt template JSON");
  };
  auto embed_opts = [&](CLI::App* sub) {
    sub->add_option("--embeddings", o.embeddings, "JSONL of {hash, vector}");
    sub->add_option("--embed-endpoint", o.embed_endpoint, "Embeddings endpoint URL");
    sub->add_option("--embed-model", o.embed_model, "Embedding model name");
  };
  auto run_opts = [&](CLI::App* sub) {
    sub->add_option("--k", o.k, "Demonstrations per context")->capture_default_str();
    sub->add_option("--lambda-d", o.lambda_d, "Relevance vs diversity")->capture_default_str();
    sub->add_option("--lambda-b", o.lambda_b, "Relevance vs quality bias")
        ->capture_default_str();
    sub->add_option("--seed", o.seed, "Shuffle seed for request order")->capture_default_str();
    sub->add_option("--fixed-demos", o.fixed_demos, "JSONL of {question, answer} for Fix");
    sub->add_flag("--rescale-bias", o.rescale_bias, "Min-max rescale biases to [0, 1]");
  };

  auto* ingest = app.add_subcommand("ingest", "Convert a dataset to canonical JSONL");
  common(ingest);

  auto* embed = app.add_subcommand("embed", "Fill the embedding cache");
  common(embed);
  embed_opts(embed);
  embed->add_option("--credential-env", o.credential_env,
                    "Environment variable holding the API key");
  embed->add_option("--export-missing", o.export_missing,
                    "Write {hash, text} lines still lacking embeddings");

  auto* bias = app.add_subcommand("bias", "Fill the quality-bias cache");
  common(bias);
  backend_opts(bias);

  auto* eval = app.add_subcommand("eval", "Evaluate one retriever");
  common(eval);
  backend_opts(eval);
  embed_opts(eval);
  run_opts(eval);
  eval->add_option("--method", o.method, "Retriever")->capture_default_str();

  auto* ablate = app.add_subcommand("ablate", "Evaluate several retrievers");
  common(ablate);
  backend_opts(ablate);
  embed_opts(ablate);
  run_opts(ablate);
  ablate->add_option("--method", o.methods, "Comma-separated retrievers (default: all six)");

  auto* sweep = app.add_subcommand("sweep", "Sweep lambda_d for Rel+Div+Bias");
  common(sweep);
  backend_opts(sweep);
  embed_opts(sweep);
  run_opts(sweep);
  sweep->add_option("--grid", o.grid, "Comma-separated lambda_d values")->capture_default_str();
  sweep->add_flag("!--no-svg", o.svg, "Skip the SVG scatter");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  CLI::App* sub = app.get_subcommands().front();
  c.command = sub->get_name();
  try {
    if (c.command == "ingest") return cmd_ingest(c);
    if (c.command == "embed") return cmd_embed(c);
    if (c.command == "bias") return cmd_bias(c);
    if (c.command == "eval") return cmd_eval(c);
    if (c.command == "ablate") return cmd_ablate(c);
    if (c.command == "sweep") return cmd_sweep(c);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message << "\n";
    return exit_code_for(f.status);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitOther;
  }
  return kExitOther;
}
