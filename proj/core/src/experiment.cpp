#include "ragbias/experiment.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "ragbias/mining.hpp"
#include "ragbias/retrieval.hpp"
#include "ragbias/rng.hpp"

namespace ragbias {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& context) {
  if (!j.is_object())
    throw ConfigError("config section \"" + context + "\" must be an object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key))
      throw ConfigError("unknown config key \"" + key + "\" in " + context);
  }
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", (unsigned long long)v);
  return buf;
}

// Fixed-width decimal format so identical runs emit identical bytes.
std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

class TsvWriter {
 public:
  TsvWriter(const fs::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw DataError("cannot open output file " + path.string());
    write_row(header);
  }

  void write_row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << '\t';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

EndpointConfig parse_endpoint(const json& j, const std::string& context) {
  check_keys(j,
             {"base_url", "model", "auth_env", "timeout_s", "max_retries",
              "backoff_s", "temperature", "request_logprobs", "top_logprobs"},
             context);
  EndpointConfig cfg;
  cfg.base_url = j.value("base_url", std::string{});
  cfg.model = j.value("model", std::string{});
  cfg.auth_env = j.value("auth_env", std::string{});
  cfg.timeout_s = j.value("timeout_s", cfg.timeout_s);
  cfg.max_retries = j.value("max_retries", cfg.max_retries);
  cfg.backoff_s = j.value("backoff_s", cfg.backoff_s);
  cfg.temperature = j.value("temperature", cfg.temperature);
  cfg.request_logprobs = j.value("request_logprobs", cfg.request_logprobs);
  cfg.top_logprobs = j.value("top_logprobs", cfg.top_logprobs);
  return cfg;
}

// Endpoint-backed component: HTTP for real base_urls, mock otherwise or
// under --mock.
std::unique_ptr<ChatBackend> make_backend(const json& spec,
                                          const EndpointConfig& cfg,
                                          bool force_mock) {
  bool use_mock = force_mock || cfg.base_url.empty() ||
                  spec.contains("mock_script");
  if (!use_mock) return std::make_unique<HttpBackend>();
  if (spec.contains("mock_script")) {
    return std::make_unique<MockBackend>(
        MockBackend::from_script_file(spec["mock_script"].get<std::string>()));
  }
  return std::make_unique<MockBackend>();
}

TaskType task_for(const std::string& name) {
  if (name == "gender" || name == "synthetic") return TaskType::NameGeneration;
  if (name == "politics") return TaskType::BinaryChoice;
  throw ConfigError("unknown task \"" + name + "\"");
}

WorldConfig parse_world(const json& j) {
  check_keys(j,
             {"dimension", "docs_per_group_per_query", "n_queries",
              "bias_direction_seed", "cluster_spread", "doc_offset",
              "query_bias", "seed"},
             "world");
  WorldConfig cfg;
  cfg.dimension = j.value("dimension", cfg.dimension);
  cfg.docs_per_group_per_query =
      j.value("docs_per_group_per_query", cfg.docs_per_group_per_query);
  cfg.n_queries = j.value("n_queries", cfg.n_queries);
  cfg.bias_direction_seed =
      j.value("bias_direction_seed", cfg.bias_direction_seed);
  cfg.cluster_spread = j.value("cluster_spread", cfg.cluster_spread);
  cfg.doc_offset = j.value("doc_offset", cfg.doc_offset);
  cfg.query_bias = j.value("query_bias", cfg.query_bias);
  cfg.seed = j.value("seed", cfg.seed);
  return cfg;
}

Vec parse_vec(const json& arr, const std::string& context) {
  if (!arr.is_array() || arr.empty())
    throw ConfigError(context + " must be a non-empty array");
  Vec v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i)
    v[Eigen::Index(i)] = arr[i].get<double>();
  return v;
}

std::vector<double> parse_grid(const json& j, const std::string& context) {
  if (j.is_array()) {
    std::vector<double> values;
    for (const auto& v : j) values.push_back(v.get<double>());
    if (values.empty()) throw ConfigError(context + " grid is empty");
    return values;
  }
  check_keys(j, {"lo", "hi", "count"}, context);
  return linspace(j.at("lo").get<double>(), j.at("hi").get<double>(),
                  j.at("count").get<int>());
}

TrainConfig parse_train(const json& j, std::uint64_t seed) {
  check_keys(j,
             {"learning_rate", "epochs", "tau_loss", "weight_decay", "method",
              "peft_layers", "wise_lambda"},
             "train");
  TrainConfig cfg;
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.tau_loss = j.value("tau_loss", cfg.tau_loss);
  cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
  cfg.peft_layers = j.value("peft_layers", cfg.peft_layers);
  cfg.wise_lambda = j.value("wise_lambda", cfg.wise_lambda);
  cfg.seed = seed;
  std::string method = j.value("method", std::string("full"));
  if (method == "full") {
    cfg.method = TrainMethod::Full;
  } else if (method == "peft") {
    cfg.method = TrainMethod::Peft;
  } else if (method == "wise_ft") {
    cfg.method = TrainMethod::WiseFt;
  } else {
    throw ConfigError("unknown train method \"" + method + "\"");
  }
  return cfg;
}

void write_pairs(const PairSet& pairs, std::size_t dropped,
                 const fs::path& path) {
  json entries = json::array();
  for (const auto& entry : pairs.entries) {
    auto vec_to_json = [](const Vec& v) {
      json arr = json::array();
      for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
      return arr;
    };
    json positives = json::array();
    for (const auto& p : entry.positives) positives.push_back(vec_to_json(p));
    json negatives = json::array();
    for (const auto& n : entry.negatives) negatives.push_back(vec_to_json(n));
    entries.push_back({{"query_id", entry.query_id},
                       {"query_emb", vec_to_json(entry.query_emb)},
                       {"positives", positives},
                       {"negatives", negatives}});
  }
  json out = {{"entries", entries}, {"dropped_queries", dropped}};
  std::ofstream file(path);
  if (!file) throw DataError("cannot open output file " + path.string());
  file << out.dump(1) << '\n';
}

PairSet read_pairs(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open pair file " + path);
  json j = json::parse(file, nullptr, false);
  if (j.is_discarded() || !j.contains("entries"))
    throw DataError("malformed pair file " + path);
  PairSet pairs;
  for (const auto& e : j["entries"]) {
    PairSet::Entry entry;
    entry.query_id = e.at("query_id").get<std::string>();
    entry.query_emb = parse_vec(e.at("query_emb"), "query_emb");
    for (const auto& p : e.at("positives"))
      entry.positives.push_back(parse_vec(p, "positive"));
    for (const auto& n : e.at("negatives"))
      entry.negatives.push_back(parse_vec(n, "negative"));
    pairs.entries.push_back(std::move(entry));
  }
  pairs.validate();
  return pairs;
}

void write_provenance(const ExperimentConfig& cfg, const RunOptions& opts,
                      const std::string& command,
                      const std::vector<std::string>& component_ids) {
  json p = {{"config_hash", cfg.config_hash},
            {"seed", opts.seed},
            {"generator", kGeneratorId},
            {"command", command},
            {"component_ids", component_ids}};
  fs::create_directories(opts.out_dir);
  std::ofstream out(fs::path(opts.out_dir) / "provenance.json");
  if (!out) throw DataError("cannot write provenance record");
  out << p.dump(1) << '\n';
}

std::string llm_component_id(const Assembly& assembly) {
  if (const auto* endpoint = std::get_if<EndpointLlm>(&assembly.llm)) {
    return "llm:endpoint:" + endpoint->cfg.model;
  }
  return "llm:synthetic";
}

// E_b / R_b scatter for a family; shared by fit, select, pareto, simulate.
struct FamilyMeasurement {
  std::vector<EmbedderCandidate> candidates;
};

FamilyMeasurement measure_family(const Assembly& assembly,
                                 const RunOptions& opts) {
  const auto& members =
      assembly.family.empty()
          ? std::vector<EmbedderModel>{assembly.embedder}
          : assembly.family;
  FamilyMeasurement out;
  out.candidates.resize(members.size());
  std::mutex mutex;
  std::exception_ptr first_error;
  parallel_for(members.size(), opts.workers, [&](std::size_t i) {
    try {
      EmbedderCandidate candidate;
      candidate.embedder_id = members[i].id;
      candidate.embedder_bias =
          embedder_bias(members[i], assembly.queries, assembly.corpus).value;
      candidate.rag_bias =
          rag_bias(assembly.llm, members[i], assembly.corpus, assembly.queries,
                   assembly.judge.get(), opts.seed)
              .value;
      out.candidates[i] = std::move(candidate);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) std::rethrow_exception(first_error);
  return out;
}

PairSet pairs_for(const ExperimentConfig& cfg, const Assembly& assembly) {
  if (cfg.raw.contains("pairs")) {
    const json& spec = cfg.raw["pairs"];
    check_keys(spec, {"path", "k_per_steer", "steer"}, "pairs");
    if (spec.contains("path")) return read_pairs(spec["path"].get<std::string>());
    if (!assembly.world)
      throw ConfigError("pairs without a path need a synthetic world");
    return gen_pairs(*assembly.world, spec.value("k_per_steer", 3),
                     spec.value("steer", 1.0));
  }
  if (assembly.world) return gen_pairs(*assembly.world);
  throw ConfigError("no pair source: give pairs.path or a synthetic world");
}

std::pair<double, double> validate_adapter(const AdapterStack& stack,
                                           const Assembly& assembly) {
  EmbedderModel model;
  model.id = "adapter";
  model.adapter = stack;
  double e_b = embedder_bias(model, assembly.queries, assembly.corpus).value;
  double ndcg = 0.0;
  if (assembly.world) {
    std::vector<std::pair<std::string, std::string>> run;
    for (const auto& query : assembly.queries) {
      Vec emb = model.embed_query(query.embedding);
      auto top = retrieve_topk(emb, assembly.corpus, 1, query.id);
      run.emplace_back(query.id, top.ranked.front().doc_id);
    }
    ndcg = ndcg_at_1(run, assembly.world->qrels);
  }
  return {e_b, ndcg};
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse(text);
}

ExperimentConfig ExperimentConfig::parse(const std::string& json_text) {
  json j = json::parse(json_text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  check_keys(j,
             {"schema_version", "task", "corpus", "queries", "qrels", "world",
              "embedder", "family", "llm", "judge", "text_embedder", "train",
              "pairs", "mine", "sweep", "grids", "golds"},
             "top level");
  if (!j.contains("schema_version") ||
      j["schema_version"].get<int>() != kSchemaVersion) {
    throw ConfigError("config schema_version must be " +
                      std::to_string(kSchemaVersion));
  }
  if (!j.contains("task")) throw ConfigError("config needs a task");
  task_for(j["task"].get<std::string>());  // validate early

  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.config_hash = hex64(fnv1a64(j.dump()));
  return cfg;
}

Assembly assemble(const ExperimentConfig& cfg, const RunOptions& opts) {
  const json& j = cfg.raw;
  Assembly assembly;
  std::string task_name = j["task"].get<std::string>();
  assembly.task = task_for(task_name);

  if (task_name == "synthetic") {
    if (!j.contains("world"))
      throw ConfigError("synthetic task needs a world section");
    assembly.world = gen_world(parse_world(j["world"]));
    assembly.corpus = assembly.world->corpus;
    assembly.queries = assembly.world->queries;
  } else {
    if (!j.contains("corpus") || !j.contains("queries"))
      throw ConfigError(task_name + " task needs corpus and queries paths");
    check_keys(j["corpus"], {"path"}, "corpus");
    check_keys(j["queries"], {"path"}, "queries");
    assembly.corpus =
        load_corpus(j["corpus"]["path"].get<std::string>(), assembly.task);
    assembly.queries =
        load_queries(j["queries"]["path"].get<std::string>(), assembly.task);
  }

  Vec bias_direction;
  if (assembly.world) bias_direction = assembly.world->bias_direction;

  if (j.contains("embedder")) {
    const json& e = j["embedder"];
    check_keys(e, {"id", "adapter", "projection"}, "embedder");
    if (e.contains("id")) assembly.embedder.id = e["id"].get<std::string>();
    if (e.contains("adapter"))
      assembly.embedder.adapter = load_adapter(e["adapter"].get<std::string>());
    if (e.contains("projection")) {
      const json& p = e["projection"];
      check_keys(p, {"alpha", "direction"}, "embedder.projection");
      ProjectionSpec spec;
      spec.alpha = p.value("alpha", 1.0);
      if (p.contains("direction")) {
        spec.bias_direction = parse_vec(p["direction"], "projection direction");
      } else if (bias_direction.size() > 0) {
        spec.bias_direction = bias_direction;
      } else {
        throw ConfigError("projection needs a direction outside synthetic worlds");
      }
      assembly.embedder.projection = std::move(spec);
    }
  }

  if (j.contains("family")) {
    const json& f = j["family"];
    check_keys(f, {"alphas", "direction"}, "family");
    Vec p;
    if (f.contains("direction")) {
      p = parse_vec(f["direction"], "family direction");
    } else if (bias_direction.size() > 0) {
      p = bias_direction;
    } else {
      throw ConfigError("family needs a direction outside synthetic worlds");
    }
    if (!f.contains("alphas")) throw ConfigError("family needs an alphas grid");
    assembly.family =
        gen_embedder_family(p, parse_grid(f["alphas"], "family.alphas")).members;
  }

  if (j.contains("llm")) {
    const json& l = j["llm"];
    check_keys(l, {"synthetic", "endpoint", "mock_script"}, "llm");
    if (l.contains("synthetic") == l.contains("endpoint"))
      throw ConfigError("llm needs exactly one of synthetic or endpoint");
    if (l.contains("synthetic")) {
      const json& s = l["synthetic"];
      check_keys(s, {"own_bias", "sensitivity", "noise_sd"}, "llm.synthetic");
      SyntheticLlm synthetic;
      synthetic.params.own_bias = s.value("own_bias", 0.0);
      synthetic.params.sensitivity = s.value("sensitivity", 0.0);
      synthetic.params.noise_sd = s.value("noise_sd", 0.0);
      synthetic.params.validate();
      assembly.llm = synthetic;
    } else {
      EndpointConfig endpoint_cfg = parse_endpoint(l["endpoint"], "llm.endpoint");
      assembly.llm_backend = make_backend(l, endpoint_cfg, opts.force_mock);
      assembly.llm = EndpointLlm{assembly.llm_backend.get(), endpoint_cfg};
    }
  }

  if (j.contains("judge")) {
    const json& jj = j["judge"];
    check_keys(jj, {"endpoint", "mock_script"}, "judge");
    EndpointConfig judge_cfg;
    if (jj.contains("endpoint"))
      judge_cfg = parse_endpoint(jj["endpoint"], "judge.endpoint");
    assembly.judge_backend = make_backend(jj, judge_cfg, opts.force_mock);
    assembly.judge =
        std::make_unique<EndpointJudge>(*assembly.judge_backend, judge_cfg);
  }

  if (j.contains("text_embedder")) {
    const json& t = j["text_embedder"];
    check_keys(t, {"endpoint", "mock_script"}, "text_embedder");
    EndpointConfig emb_cfg;
    if (t.contains("endpoint"))
      emb_cfg = parse_endpoint(t["endpoint"], "text_embedder.endpoint");
    assembly.embedder_backend = make_backend(t, emb_cfg, opts.force_mock);
    assembly.text_embedder = std::make_unique<EndpointTextEmbedder>(
        *assembly.embedder_backend, emb_cfg);
  }

  return assembly;
}

int run_measure(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  ComponentBias c = corpus_bias(assembly.corpus);
  ComponentBias e =
      embedder_bias(assembly.embedder, assembly.queries, assembly.corpus);
  ComponentBias l = llm_bias(assembly.llm, assembly.queries, assembly.task,
                             assembly.judge.get(), opts.seed);
  ComponentBias r = rag_bias(assembly.llm, assembly.embedder, assembly.corpus,
                             assembly.queries, assembly.judge.get(), opts.seed);

  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "measure.tsv",
                  {"component", "bias", "n"});
  for (const auto& bias : {c, e, l, r}) {
    table.write_row(
        {to_string(bias.component), fmt(bias.value), std::to_string(bias.n)});
  }
  write_provenance(cfg, opts, "measure",
                   {"embedder:" + assembly.embedder.id, llm_component_id(assembly)});
  return 0;
}

int run_train(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  PairSet pairs = pairs_for(cfg, assembly);
  TrainConfig train_cfg =
      parse_train(cfg.raw.value("train", json::object()), opts.seed);
  TrainResult result = train_adapter(train_cfg, pairs);

  fs::create_directories(opts.out_dir);
  save_adapter(result.stack, (fs::path(opts.out_dir) / "adapter.json").string(),
               cfg.config_hash, opts.seed);
  TsvWriter history(fs::path(opts.out_dir) / "history.tsv", {"epoch", "loss"});
  for (std::size_t i = 0; i < result.history.size(); ++i)
    history.write_row({std::to_string(i + 1), fmt(result.history[i])});

  auto [e_b, ndcg] = validate_adapter(result.stack, assembly);
  TsvWriter summary(fs::path(opts.out_dir) / "train.tsv",
                    {"method", "learning_rate", "epochs", "final_loss",
                     "validation_bias", "ndcg_at_1"});
  summary.write_row({train_cfg.method_name(), fmt(train_cfg.learning_rate),
                     std::to_string(train_cfg.epochs),
                     fmt(result.history.empty() ? 0.0 : result.history.back()),
                     fmt(e_b), fmt(ndcg)});
  write_provenance(cfg, opts, "train", {"embedder:" + assembly.embedder.id});
  return 0;
}

int run_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  PairSet pairs = pairs_for(cfg, assembly);

  const json& s = cfg.raw.value("sweep", json::object());
  check_keys(s, {"learning_rates", "epoch_counts", "tau_loss"}, "sweep");
  std::vector<double> learning_rates = {1e-2, 3e-3};
  if (s.contains("learning_rates"))
    learning_rates = parse_grid(s["learning_rates"], "sweep.learning_rates");
  std::vector<int> epoch_counts = {5, 10, 15};
  if (s.contains("epoch_counts")) {
    epoch_counts.clear();
    for (const auto& v : s["epoch_counts"]) epoch_counts.push_back(v.get<int>());
  }
  double tau_loss = s.value("tau_loss", 0.05);

  std::vector<TrainConfig> grid =
      sweep_grid(learning_rates, epoch_counts, tau_loss, opts.seed);
  std::vector<SweepRecord> records(grid.size());
  std::mutex mutex;
  std::exception_ptr first_error;
  parallel_for(grid.size(), opts.workers, [&](std::size_t i) {
    try {
      TrainResult result = train_adapter(grid[i], pairs);
      SweepRecord record;
      record.run_id = "run" + std::to_string(i);
      record.method = grid[i].method_name();
      record.learning_rate = grid[i].learning_rate;
      record.epochs = grid[i].epochs;
      record.final_loss = result.history.empty() ? 0.0 : result.history.back();
      auto [e_b, ndcg] = validate_adapter(result.stack, assembly);
      record.validation_bias = e_b;
      record.accuracy = ndcg;
      record.stack = std::move(result.stack);
      records[i] = std::move(record);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) std::rethrow_exception(first_error);

  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "sweep.tsv",
                  {"run_id", "method", "learning_rate", "epochs", "final_loss",
                   "validation_bias", "ndcg_at_1"});
  for (const auto& record : records) {
    table.write_row({record.run_id, record.method, fmt(record.learning_rate),
                     std::to_string(record.epochs), fmt(record.final_loss),
                     fmt(record.validation_bias), fmt(record.accuracy)});
  }
  write_provenance(cfg, opts, "sweep", {"embedder:" + assembly.embedder.id});
  return 0;
}

int run_mine_pairs(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  const json& m = cfg.raw.value("mine", json::object());
  check_keys(m, {"corpora", "k_per_steer"}, "mine");

  std::vector<Corpus> corpora;
  if (m.contains("corpora")) {
    for (const auto& path : m["corpora"])
      corpora.push_back(load_corpus(path.get<std::string>(), assembly.task));
  } else {
    corpora.push_back(assembly.corpus);
  }
  if (!assembly.text_embedder)
    throw ConfigError("mine-pairs needs a text_embedder");
  if (!assembly.judge) throw ConfigError("mine-pairs needs a judge");

  MiningResult result = select_training_pairs(
      assembly.queries, corpora, *assembly.text_embedder, *assembly.judge,
      assembly.task, m.value("k_per_steer", 3));

  fs::create_directories(opts.out_dir);
  write_pairs(result.pairs, result.dropped_queries,
              fs::path(opts.out_dir) / "pairs.json");
  TsvWriter table(fs::path(opts.out_dir) / "mine.tsv",
                  {"query_id", "positives", "negatives"});
  for (const auto& entry : result.pairs.entries) {
    table.write_row({entry.query_id, std::to_string(entry.positives.size()),
                     std::to_string(entry.negatives.size())});
  }
  write_provenance(cfg, opts, "mine-pairs", {});
  return 0;
}

namespace {

const json& grids_section(const ExperimentConfig& cfg) {
  static const json empty = json::object();
  if (!cfg.raw.contains("grids")) return empty;
  check_keys(cfg.raw["grids"],
             {"alphas", "taus", "ns", "corpus_targets", "pareto_target"},
             "grids");
  return cfg.raw["grids"];
}

// Shared fit pipeline: family scatter, OLS, optimal bias.
LinearBiasFit write_fit_outputs(const FamilyMeasurement& measurement,
                                const RunOptions& opts) {
  std::vector<std::pair<double, double>> points;
  for (const auto& c : measurement.candidates)
    points.emplace_back(c.embedder_bias, c.rag_bias);
  LinearBiasFit fit = fit_linear(points);

  fs::create_directories(opts.out_dir);
  TsvWriter scatter(fs::path(opts.out_dir) / "fit_points.tsv",
                    {"embedder_id", "embedder_bias", "rag_bias"});
  for (const auto& c : measurement.candidates) {
    scatter.write_row(
        {c.embedder_id, fmt(c.embedder_bias), fmt(c.rag_bias)});
  }

  double optimal = optimal_bias(fit);
  TsvWriter summary(fs::path(opts.out_dir) / "fit.tsv",
                    {"slope", "intercept", "r_squared", "n_points",
                     "residual_sd", "optimal_bias"});
  summary.write_row({fmt(fit.slope), fmt(fit.intercept), fmt(fit.r_squared),
                     std::to_string(fit.n_points), fmt(fit.residual_sd),
                     fmt(optimal)});
  return fit;
}

}  // namespace

int run_fit(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  FamilyMeasurement measurement = measure_family(assembly, opts);
  write_fit_outputs(measurement, opts);
  write_provenance(cfg, opts, "fit", {llm_component_id(assembly)});
  return 0;
}

int run_select(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  FamilyMeasurement measurement = measure_family(assembly, opts);
  std::string chosen = select_optimal(measurement.candidates);

  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "select.tsv",
                  {"embedder_id", "embedder_bias", "rag_bias", "selected"});
  for (const auto& c : measurement.candidates) {
    table.write_row({c.embedder_id, fmt(c.embedder_bias), fmt(c.rag_bias),
                     c.embedder_id == chosen ? "1" : "0"});
  }
  write_provenance(cfg, opts, "select", {"selected:" + chosen});
  return 0;
}

int run_pareto(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  if (!assembly.world)
    throw ConfigError("pareto needs a synthetic world for relevance grades");
  const auto& members =
      assembly.family.empty()
          ? std::vector<EmbedderModel>{assembly.embedder}
          : assembly.family;

  std::vector<ParetoPoint> points(members.size());
  std::mutex mutex;
  std::exception_ptr first_error;
  parallel_for(members.size(), opts.workers, [&](std::size_t i) {
    try {
      ParetoPoint point;
      point.embedder_id = members[i].id;
      point.bias = rag_bias(assembly.llm, members[i], assembly.corpus,
                            assembly.queries, assembly.judge.get(), opts.seed)
                       .value;
      std::vector<std::pair<std::string, std::string>> run;
      for (const auto& query : assembly.queries) {
        Vec emb = members[i].embed_query(query.embedding);
        auto top = retrieve_topk(emb, assembly.corpus, 1, query.id);
        run.emplace_back(query.id, top.ranked.front().doc_id);
      }
      point.accuracy = ndcg_at_1(run, assembly.world->qrels);
      points[i] = std::move(point);
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) std::rethrow_exception(first_error);

  double target = grids_section(cfg).value("pareto_target", 0.0);
  std::vector<ParetoPoint> frontier = pareto_frontier(points, target);
  std::set<std::string> on_frontier;
  for (const auto& p : frontier) on_frontier.insert(p.embedder_id);

  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "pareto.tsv",
                  {"embedder_id", "rag_bias", "ndcg_at_1", "on_frontier"});
  for (const auto& p : points) {
    table.write_row({p.embedder_id, fmt(p.bias), fmt(p.accuracy),
                     on_frontier.count(p.embedder_id) ? "1" : "0"});
  }
  write_provenance(cfg, opts, "pareto", {llm_component_id(assembly)});
  return 0;
}

int run_project_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  if (!assembly.world && assembly.family.empty())
    throw ConfigError("project-sweep needs a family or a synthetic world");

  const json& grids = grids_section(cfg);
  std::vector<double> alphas = linspace(0.0, 3.0, 13);
  if (grids.contains("alphas"))
    alphas = parse_grid(grids["alphas"], "grids.alphas");

  Vec p = assembly.world ? assembly.world->bias_direction
                         : assembly.family.front().projection->bias_direction;
  std::vector<EmbedderModel> members = gen_embedder_family(p, alphas).members;

  std::vector<std::array<double, 2>> rows(members.size());
  std::mutex mutex;
  std::exception_ptr first_error;
  parallel_for(members.size(), opts.workers, [&](std::size_t i) {
    try {
      double e_b =
          embedder_bias(members[i], assembly.queries, assembly.corpus).value;
      double r_b = rag_bias(assembly.llm, members[i], assembly.corpus,
                            assembly.queries, assembly.judge.get(), opts.seed)
                       .value;
      rows[i] = {e_b, r_b};
    } catch (...) {
      std::lock_guard<std::mutex> lock(mutex);
      if (!first_error) first_error = std::current_exception();
    }
  });
  if (first_error) std::rethrow_exception(first_error);

  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "project_sweep.tsv",
                  {"alpha", "embedder_bias", "rag_bias"});
  for (std::size_t i = 0; i < members.size(); ++i)
    table.write_row({fmt(alphas[i]), fmt(rows[i][0]), fmt(rows[i][1])});
  write_provenance(cfg, opts, "project-sweep", {llm_component_id(assembly)});
  return 0;
}

int run_sample_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  const json& grids = grids_section(cfg);
  std::vector<double> taus = {0.0, 0.05, 0.25, 1.0};
  if (grids.contains("taus")) taus = parse_grid(grids["taus"], "grids.taus");
  std::vector<int> ns = {3};
  if (grids.contains("ns")) {
    ns.clear();
    for (const auto& v : grids["ns"]) ns.push_back(v.get<int>());
  }

  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "sample_sweep.tsv",
                  {"tau", "n", "sampled_bias"});
  for (double tau : taus) {
    for (int n : ns) {
      if (n < 1 || std::size_t(n) > assembly.corpus.documents.size())
        throw ConfigError("sample pool size out of range");
      double sum = 0.0;
      for (const auto& query : assembly.queries) {
        Vec emb = assembly.embedder.embed_query(query.embedding);
        std::string doc_id =
            sample_boltzmann(emb, assembly.corpus, std::size_t(n), tau,
                             derive_seed(opts.seed, query.id));
        const Document* doc = assembly.corpus.find(doc_id);
        if (!doc || !doc->labels)
          throw DataError("sampled document missing labels");
        sum += doc->labels->signed_value();
      }
      table.write_row({fmt(tau), std::to_string(n),
                       fmt(sum / double(assembly.queries.size()))});
    }
  }
  write_provenance(cfg, opts, "sample-sweep",
                   {"embedder:" + assembly.embedder.id});
  return 0;
}

int run_corpus_sweep(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  const json& grids = grids_section(cfg);
  std::vector<double> targets = {-0.2, -0.1, 0.0, 0.1, 0.2};
  if (grids.contains("corpus_targets"))
    targets = parse_grid(grids["corpus_targets"], "grids.corpus_targets");

  const auto& members =
      assembly.family.empty()
          ? std::vector<EmbedderModel>{assembly.embedder}
          : assembly.family;
  std::vector<CorpusSweepRow> rows =
      corpus_sweep(assembly.llm, members, assembly.corpus, assembly.queries,
                   assembly.judge.get(), targets, opts.seed);

  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "corpus_sweep.tsv",
                  {"embedder_id", "target_cb", "actual_cb", "rag_bias"});
  for (const auto& row : rows) {
    table.write_row({row.embedder_id, fmt(row.target_cb), fmt(row.actual_cb),
                     fmt(row.rag_bias)});
  }
  write_provenance(cfg, opts, "corpus-sweep", {llm_component_id(assembly)});
  return 0;
}

int run_utility(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  Qrels qrels;
  if (assembly.world) {
    qrels = assembly.world->qrels;
  } else if (cfg.raw.contains("qrels")) {
    check_keys(cfg.raw["qrels"], {"path"}, "qrels");
    qrels = load_qrels(cfg.raw["qrels"]["path"].get<std::string>());
  } else {
    throw ConfigError("utility needs qrels or a synthetic world");
  }

  const auto& members =
      assembly.family.empty()
          ? std::vector<EmbedderModel>{assembly.embedder}
          : assembly.family;
  fs::create_directories(opts.out_dir);
  TsvWriter table(fs::path(opts.out_dir) / "utility.tsv",
                  {"embedder_id", "ndcg_at_1"});
  for (const auto& member : members) {
    std::vector<std::pair<std::string, std::string>> run;
    for (const auto& query : assembly.queries) {
      Vec emb = member.embed_query(query.embedding);
      auto top = retrieve_topk(emb, assembly.corpus, 1, query.id);
      run.emplace_back(query.id, top.ranked.front().doc_id);
    }
    table.write_row({member.id, fmt(ndcg_at_1(run, qrels))});
  }
  write_provenance(cfg, opts, "utility", {});
  return 0;
}

int run_simulate(const ExperimentConfig& cfg, const RunOptions& opts) {
  Assembly assembly = assemble(cfg, opts);
  if (!assembly.world) throw ConfigError("simulate needs a synthetic world");
  if (assembly.family.empty())
    throw ConfigError("simulate needs an embedder family");

  FamilyMeasurement measurement = measure_family(assembly, opts);
  LinearBiasFit fit = write_fit_outputs(measurement, opts);
  std::string chosen = select_optimal(measurement.candidates);
  double chosen_rb = 0.0, chosen_eb = 0.0;
  for (const auto& c : measurement.candidates) {
    if (c.embedder_id == chosen) {
      chosen_rb = c.rag_bias;
      chosen_eb = c.embedder_bias;
    }
  }

  TsvWriter summary(fs::path(opts.out_dir) / "simulate.tsv",
                    {"slope", "intercept", "r_squared", "selected",
                     "selected_embedder_bias", "selected_rag_bias"});
  summary.write_row({fmt(fit.slope), fmt(fit.intercept), fmt(fit.r_squared),
                     chosen, fmt(chosen_eb), fmt(chosen_rb)});
  write_provenance(cfg, opts, "simulate", {"selected:" + chosen});
  return 0;
}

void parallel_for(std::size_t n, int workers,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  int thread_count = std::max(1, std::min<int>(workers, int(n)));
  if (thread_count == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> threads;
  threads.reserve(std::size_t(thread_count));
  for (int t = 0; t < thread_count; ++t) {
    threads.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1))
        fn(i);
    });
  }
  for (auto& thread : threads) thread.join();
}

}  // namespace ragbias
