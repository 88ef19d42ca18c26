// acpf — algorithm configuration framework CLI.
//
// Subcommands: tune (offline knowledge-encoding), recommend (query a saved
// model), run-online (streamed knowledge-encoding), bench (strategy
// comparison on the synthetic suites), gen-suite (write a suite to disk).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "acpf/acpf.hpp"

namespace fs = std::filesystem;
using namespace acpf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitBadInput = 2;
constexpr int kExitTargetFailure = 3;

struct TuneArgs {
  std::string scenario_path;
  std::string model_spec;
  std::string strategy;
  double epsilon = -1.0;
  std::uint64_t budget_evals = 0;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string log_path;
  std::size_t parallelism = std::max(1u, std::thread::hardware_concurrency());
};

void write_run_log(const fs::path& path, const std::vector<nlohmann::ordered_json>& events) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write run log '" + path.string() + "'");
  for (const auto& e : events) out << e.dump() << '\n';
}

int cmd_tune(const TuneArgs& args) {
  Scenario scenario = load_scenario(args.scenario_path);
  const ModelSpec spec = parse_model_spec(args.model_spec);
  StrategySpec strategy = scenario.strategy;
  if (!args.strategy.empty()) strategy.name = strategy_from_string(args.strategy);
  if (args.epsilon >= 0.0) strategy.epsilon = args.epsilon;
  Budget budget = scenario.budget;
  if (args.budget_evals > 0) budget.max_evaluations = args.budget_evals;
  if (budget.max_evaluations < 1) throw ScenarioError("budget must be positive");

  const auto result =
      run_kep(scenario, strategy, spec, budget, args.seed, std::nullopt, args.parallelism);
  save_model(args.out_path, result.model);
  const fs::path log_path =
      args.log_path.empty() ? fs::path(args.out_path + ".runlog.ndjson") : fs::path(args.log_path);
  write_run_log(log_path, result.state.log);

  std::printf(
      "tune: model=%s strategy=%s evaluations=%zu/%zu iterations=%zu wall=%.2fs out=%s log=%s\n",
      model_spec_to_string(spec).c_str(), strategy_to_string(strategy.name).c_str(),
      result.state.used.evaluations, budget.max_evaluations, result.state.t,
      result.state.used.wall_seconds, args.out_path.c_str(), log_path.string().c_str());
  return kExitOk;
}

Instance parse_instance_arg(const std::string& text, std::size_t expected_dim) {
  Instance inst;
  const auto hash = text.find('#');
  if (hash != std::string::npos) {
    const auto set = load_instance_set(text.substr(0, hash));
    inst = set.at(text.substr(hash + 1));
  } else if (text.find(',') != std::string::npos) {
    const auto fields = detail::split_csv_line(text);
    if (fields.size() < 3)
      throw ScenarioError("inline instance row needs id,path,f1,... (got '" + text + "')");
    inst.id = fields[0];
    inst.path = fields[1];
    for (std::size_t i = 2; i < fields.size(); ++i) {
      try {
        inst.features.push_back(std::stod(fields[i]));
      } catch (const std::exception&) {
        throw ScenarioError("instance feature '" + fields[i] + "' is not numeric");
      }
    }
    if (inst.synthetic()) inst.record = inst.features;
  } else {
    throw ScenarioError("--instance expects 'manifest.csv#id' or an inline 'id,path,f1,...' row");
  }
  if (expected_dim > 0 && inst.features.size() != expected_dim)
    throw ScenarioError("instance has " + std::to_string(inst.features.size()) +
                        " features, the model expects " + std::to_string(expected_dim));
  return inst;
}

CandidatePool parse_pool_arg(const std::string& text, const ConfigurationSpace& space) {
  CandidatePool pool;
  if (text.rfind("grid:", 0) == 0) {
    pool.kind = CandidatePool::Kind::grid;
    pool.grid_steps = static_cast<std::size_t>(std::stoul(text.substr(5)));
    if (pool.grid_steps < 1) throw ScenarioError("grid pool needs at least 1 step");
    return pool;
  }
  if (text.rfind("search:", 0) == 0) {
    pool.kind = CandidatePool::Kind::search;
    pool.search_budget = static_cast<std::size_t>(std::stoul(text.substr(7)));
    if (pool.search_budget < 1) throw ScenarioError("search pool needs a positive budget");
    return pool;
  }
  std::ifstream in(text);
  if (!in) throw ScenarioError("cannot open pool file '" + text + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioError("pool file '" + text + "': " + e.what());
  }
  const auto& arr = j.is_array() ? j : j.at("configs");
  pool.kind = CandidatePool::Kind::explicit_list;
  for (const auto& jc : arr) pool.configs.push_back(config_from_json(space, jc));
  if (pool.configs.empty()) throw ScenarioError("pool file '" + text + "' lists no configurations");
  return pool;
}

int cmd_recommend(const std::string& model_path, const std::string& instance_arg,
                  const std::string& pool_arg, const std::string& mode_arg) {
  const Model model = load_model(model_path);
  const Instance inst = parse_instance_arg(instance_arg, model.scaler.dimension());

  std::optional<CandidatePool> pool;
  if (!pool_arg.empty()) pool = parse_pool_arg(pool_arg, model.space);

  Recommendation rec;
  if ((model.kind == ModelKind::partition || model.kind == ModelKind::composite) &&
      mode_arg == "average") {
    rec = recommend_partition(std::get<PartitionModel>(model.payload), model.space, inst,
                              model.scaler, PartitionQuery::average);
    rec.source = model_kind_to_string(model.kind);
  } else {
    rec = recommend(model, inst, pool, model.scaler);
  }
  std::cout << recommendation_to_json(model.space, rec).dump() << '\n';
  return kExitOk;
}

std::vector<Instance> load_stream(const fs::path& path, const Scenario& scenario) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("cannot open stream file '" + path.string() + "'");
  std::string first;
  if (!std::getline(in, first)) throw ScenarioError("stream file '" + path.string() + "' is empty");

  std::vector<Instance> stream;
  if (first.rfind("id,", 0) == 0) {
    const auto set = load_instance_set(path);
    for (const auto& inst : set.instances()) stream.push_back(inst);
    return stream;
  }
  // Bare instance ids resolved against the scenario's instance set; repeats
  // are legal in a stream.
  const auto set = scenario_instances(scenario);
  std::string line = first;
  std::size_t arrival = 0;
  do {
    if (line.empty()) continue;
    Instance inst = set.at(line);
    inst.id = line;
    stream.push_back(std::move(inst));
    ++arrival;
  } while (std::getline(in, line));
  return stream;
}

int cmd_run_online(const std::string& scenario_path, const std::string& stream_path,
                   const std::string& variant_arg, std::uint64_t seed,
                   const std::string& out_dir) {
  const Scenario scenario = load_scenario(scenario_path);
  const auto stream = load_stream(stream_path, scenario);
  const OnlineVariant variant = online_variant_from_string(variant_arg);
  const auto result = run_online(scenario, stream, variant, scenario.budget, seed);

  const fs::path dir(out_dir);
  fs::create_directories(dir);
  {
    std::ofstream trace(dir / "trace.csv");
    if (!trace) throw Error("cannot write trace file");
    trace << "arrival,config_digest,performance\n";
    char buf[64];
    for (const auto& row : result.trace) {
      std::snprintf(buf, sizeof buf, "%.12g", row.performance);
      trace << row.arrival << ',' << row.config_digest << ',' << buf << '\n';
    }
  }
  save_model(dir / "model.json", result.model);
  save_archive(dir / "archive.ndjson", scenario.space, result.archive);
  std::printf("run-online: variant=%s arrivals=%zu evaluations=%zu out=%s\n", variant_arg.c_str(),
              result.trace.size(), result.used.evaluations, out_dir.c_str());
  return kExitOk;
}

struct BenchArgs {
  std::string suite;
  std::string strategies;
  std::uint64_t budget_evals = 600;
  std::string seeds = "0";
  std::string report_path;
  std::size_t n_train = 30;
  std::size_t n_test = 100;
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool is_online_strategy(const std::string& name) {
  return name == "reactive" || name == "surrogate_online";
}

int cmd_bench(const BenchArgs& args) {
  if (args.suite != "quadratic" && args.suite != "cliff")
    throw ScenarioError("bench supports the synthetic suites only (quadratic, cliff)");
  const auto strategies = split_list(args.strategies);
  if (strategies.empty()) throw ScenarioError("no strategies given");
  for (const auto& s : strategies)
    if (!is_online_strategy(s)) parse_model_spec(s); // validates, throws on unknown names

  std::ofstream report(args.report_path);
  if (!report) throw Error("cannot write report file '" + args.report_path + "'");
  report << "strategy,model,budget,seed,mean_regret,mean_perf,wall_s\n";

  for (const auto& strategy : strategies) {
    for (const auto& seed_text : split_list(args.seeds)) {
      const auto seed = static_cast<std::uint64_t>(std::stoull(seed_text));
      const auto suite = make_suite(args.suite, args.n_train, args.n_test, seed);
      const Scenario scenario =
          make_synthetic_scenario(args.suite, args.n_train, seed, args.budget_evals);

      const auto started = std::chrono::steady_clock::now();
      Model model;
      if (is_online_strategy(strategy)) {
        std::vector<Instance> stream;
        for (std::size_t i = 0; i < args.budget_evals; ++i)
          stream.push_back(suite.train[i % suite.train.size()]);
        model = run_online(scenario, stream, online_variant_from_string(strategy),
                           scenario.budget, seed)
                    .model;
      } else {
        model = run_kep(scenario, scenario.strategy, parse_model_spec(strategy), scenario.budget,
                        seed)
                    .model;
      }

      double regret_sum = 0.0;
      double perf_sum = 0.0;
      for (const auto& inst : suite.test.instances()) {
        const auto rec = recommend(model, inst, scenario.pool, model.scaler);
        const auto sample = evaluate(suite.space, suite.target, inst, rec.configuration, 0);
        regret_sum += oriented(suite.oracle(inst).performance, suite.target.sense) -
                      oriented(sample.performance, suite.target.sense);
        perf_sum += sample.performance;
      }
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

      char buf[160];
      std::snprintf(buf, sizeof buf, "%s,%s,%llu,%llu,%.6f,%.6f,%.3f", strategy.c_str(),
                    model_kind_to_string(model.kind).c_str(),
                    static_cast<unsigned long long>(args.budget_evals),
                    static_cast<unsigned long long>(seed),
                    regret_sum / static_cast<double>(suite.test.size()),
                    perf_sum / static_cast<double>(suite.test.size()), wall);
      report << buf << '\n';
      std::printf("bench: %s\n", buf);
    }
  }
  return kExitOk;
}

int cmd_gen_suite(const std::string& name, std::size_t n, std::uint64_t seed,
                  const std::string& out_dir) {
  const auto set = generate_instances(name, n, seed, true, name + "-");
  const fs::path dir(out_dir);
  fs::create_directories(dir / "instances");

  std::ofstream manifest(dir / "manifest.csv");
  if (!manifest) throw Error("cannot write manifest");
  manifest << "id,path,f1\n";
  char buf[64];
  for (const auto& inst : set.instances()) {
    const fs::path payload = dir / "instances" / (inst.id + ".txt");
    std::ofstream p(payload);
    std::snprintf(buf, sizeof buf, "%.17g", inst.features[0]);
    p << buf << '\n';
    manifest << inst.id << ',' << fs::absolute(payload).string() << ',' << buf << '\n';
  }

  auto scenario = synthetic_scenario_json(name, n, seed, 600);
  scenario["instances"] = {{"manifest", "manifest.csv"}};
  std::ofstream sc(dir / "scenario.json");
  sc << scenario.dump(2) << '\n';
  std::printf("gen-suite: name=%s instances=%zu out=%s\n", name.c_str(), set.size(),
              out_dir.c_str());
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"algorithm configuration framework"};
  app.require_subcommand(1);

  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "run the offline knowledge-encoding process");
  tune_cmd->add_option("--scenario", tune.scenario_path, "scenario JSON file")->required();
  tune_cmd->add_option("--model", tune.model_spec,
                       "mapping | surrogate | aggregate | partition:C | composite:perproblem+surrogate")
      ->required();
  tune_cmd->add_option("--strategy", tune.strategy, "uniform | epsilon_greedy");
  tune_cmd->add_option("--epsilon", tune.epsilon, "exploration rate for epsilon_greedy");
  tune_cmd->add_option("--budget-evals", tune.budget_evals, "override scenario evaluation budget");
  tune_cmd->add_option("--seed", tune.seed, "run seed");
  tune_cmd->add_option("--out", tune.out_path, "output model JSON path")->required();
  tune_cmd->add_option("--log", tune.log_path, "run log path (default <out>.runlog.ndjson)");
  tune_cmd->add_option("--parallelism", tune.parallelism, "max concurrent target runs");

  std::string rec_model, rec_instance, rec_pool, rec_mode = "representative";
  auto* rec_cmd = app.add_subcommand("recommend", "recommend a configuration for an instance");
  rec_cmd->add_option("--model", rec_model, "model JSON file")->required();
  rec_cmd->add_option("--instance", rec_instance, "manifest.csv#id or inline id,path,f1,... row")
      ->required();
  rec_cmd->add_option("--pool", rec_pool, "grid:N | search:N | pool JSON file (surrogate models)");
  rec_cmd->add_option("--mode", rec_mode, "partition lookup: representative | average");

  std::string on_scenario, on_stream, on_variant, on_out;
  std::uint64_t on_seed = 0;
  auto* on_cmd = app.add_subcommand("run-online", "online knowledge-encoding over an instance stream");
  on_cmd->add_option("--scenario", on_scenario, "scenario JSON file")->required();
  on_cmd->add_option("--stream", on_stream, "stream file (manifest CSV or bare id lines)")->required();
  on_cmd->add_option("--variant", on_variant, "reactive | surrogate_online")->required();
  on_cmd->add_option("--seed", on_seed, "run seed");
  on_cmd->add_option("--out", on_out, "output directory")->required();

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "compare strategies on a synthetic suite");
  bench_cmd->add_option("--suite", bench.suite, "quadratic | cliff")->required();
  bench_cmd->add_option("--strategies", bench.strategies, "comma list of model specs / online variants")
      ->required();
  bench_cmd->add_option("--budget-evals", bench.budget_evals, "evaluation budget per run");
  bench_cmd->add_option("--seeds", bench.seeds, "comma list of seeds");
  bench_cmd->add_option("--report", bench.report_path, "output CSV path")->required();
  bench_cmd->add_option("--train", bench.n_train, "training instances");
  bench_cmd->add_option("--test", bench.n_test, "held-out instances");

  std::string gen_name, gen_out;
  std::size_t gen_n = 30;
  std::uint64_t gen_seed = 0;
  auto* gen_cmd = app.add_subcommand("gen-suite", "write a synthetic suite to disk");
  gen_cmd->add_option("--name", gen_name, "quadratic | cliff")->required();
  gen_cmd->add_option("--n", gen_n, "instance count");
  gen_cmd->add_option("--seed", gen_seed, "generation seed");
  gen_cmd->add_option("--out-dir", gen_out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitBadInput;
  }

  try {
    if (tune_cmd->parsed()) return cmd_tune(tune);
    if (rec_cmd->parsed()) return cmd_recommend(rec_model, rec_instance, rec_pool, rec_mode);
    if (on_cmd->parsed()) return cmd_run_online(on_scenario, on_stream, on_variant, on_seed, on_out);
    if (bench_cmd->parsed()) return cmd_bench(bench);
    if (gen_cmd->parsed()) return cmd_gen_suite(gen_name, gen_n, gen_seed, gen_out);
  } catch (const TargetError& e) {
    std::cerr << "target execution failure: " << e.what() << '\n';
    return kExitTargetFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadInput;
  }
  return kExitBadInput;
}
