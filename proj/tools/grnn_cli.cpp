// grnn: command-line front end.
//
//   grnn generate   write a synthetic road network (nodes/edges CSV)
//   grnn transform  road network -> linkage network export and stats
//   grnn simulate   synthetic diffusion panel on a road network
//   grnn train      online training and prediction over a panel
//   grnn gradcheck  analytic vs finite-difference gradients
//   grnn bench      joint vs per-segment training cost
//
// Exit codes: 0 success, 1 invalid input or arguments, 2 numeric failure
// (non-finite values, divergence, failed gradient check).

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grnn/grnn.hpp"

#ifndef GRNN_VERSION
#define GRNN_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitNumeric = 2;

std::vector<std::string> g_argv;

json config_json(const grnn::TrainConfig& c) {
  return {{"window", c.window},
          {"hidden", c.hidden},
          {"epochs", c.epochs},
          {"alpha", c.alpha},
          {"lr", c.lr},
          {"optimizer", std::string(grnn::optimizer_name(c.optimizer))},
          {"seed", c.seed},
          {"reinit_hidden", c.reinit_hidden},
          {"hidden_stddev", c.hidden_stddev},
          {"weight_stddev", c.weight_stddev},
          {"clip_norm", c.clip_norm},
          {"divergence_factor", c.divergence_factor},
          {"divergence_patience", c.divergence_patience}};
}

json simulation_json(const grnn::SimulationParams& p) {
  return {{"beta", p.beta},         {"noise", p.noise},
          {"amplitude", p.amplitude}, {"period", p.period},
          {"initial_low", p.initial_low}, {"initial_high", p.initial_high},
          {"floor", p.floor},       {"ceiling", p.ceiling},
          {"interval_minutes", p.interval_minutes}, {"seed", p.seed}};
}

std::string graph_hash(const grnn::LinkageNetwork& link) {
  return grnn::text::hex64(grnn::text::fnv1a(grnn::format_linkages(link)));
}

std::string data_hash(const grnn::ConditionPanel& panel) {
  return grnn::text::hex64(grnn::text::fnv1a(grnn::format_panel(panel)));
}

json manifest(const std::string& command) {
  return {{"tool", "grnn"}, {"version", GRNN_VERSION}, {"command", command}, {"argv", g_argv}};
}

void write_json(const fs::path& path, const json& j) { grnn::text::write_file(path.string(), j.dump(2) + "\n"); }

fs::path prepare_out(const std::string& out) {
  fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw grnn::ValidationError("cannot create output directory '" + out + "': " + ec.message());
  return dir;
}

json report_json(const grnn::EvalReport& r) {
  return {{"mse", r.mse}, {"vd", r.vd}, {"mean_error", r.mean_error}, {"segments", r.segments},
          {"intervals", r.intervals}};
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string kind = "grid";
  std::optional<std::size_t> segments;  // chain and random default to 20; a grid keeps all
  std::size_t rows = 4;
  std::size_t cols = 4;
  std::size_t intersections = 10;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_generate(const GenerateArgs& a) {
  grnn::RoadNetwork road = [&] {
    if (a.kind == "chain") return grnn::chain_road_network(a.segments.value_or(20));
    if (a.kind == "ring") return grnn::ring_road_network(a.intersections, false);
    if (a.kind == "ring2") return grnn::ring_road_network(a.intersections, true);
    if (a.kind == "grid") return grnn::grid_road_network(a.rows, a.cols, a.segments.value_or(0));
    if (a.kind == "random") return grnn::random_road_network(a.intersections, a.segments.value_or(20), a.seed);
    throw grnn::ParameterError("unknown network kind '" + a.kind + "'");
  }();
  const auto dir = prepare_out(a.out);
  grnn::text::write_file((dir / "nodes.csv").string(), grnn::format_nodes(road));
  grnn::text::write_file((dir / "edges.csv").string(), grnn::format_edges(road));
  auto m = manifest("generate");
  m["network"] = {{"kind", a.kind},   {"segments", road.num_segments()}, {"intersections", road.num_vertices()},
                  {"rows", a.rows},   {"cols", a.cols},                  {"seed", a.seed}};
  write_json(dir / "manifest.json", m);
  std::cout << "wrote " << road.num_segments() << " segments over " << road.num_vertices() << " intersections to "
            << dir.string() << "\n";
  return kExitOk;
}

// --- transform --------------------------------------------------------------

struct GraphArgs {
  std::string nodes;
  std::string edges;
};

int cmd_transform(const GraphArgs& g, const std::string& out) {
  const auto road = grnn::load_road_network(g.nodes, g.edges);
  const auto link = grnn::transform(road);
  const auto export_text = grnn::format_linkages(link);
  const auto turns = road.turn_count();
  const bool consistent = link.num_linkages() == turns;

  const auto dir = prepare_out(out);
  grnn::text::write_file((dir / "linkages.csv").string(), export_text);
  json stats = {{"segments", link.size()},
                {"linkages", link.num_linkages()},
                {"turn_count", turns},
                {"nnz_matches_turn_count", consistent}};
  write_json(dir / "stats.json", stats);
  auto m = manifest("transform");
  m["inputs"] = {{"nodes", g.nodes}, {"edges", g.edges}};
  m["graph_hash"] = graph_hash(link);
  write_json(dir / "manifest.json", m);

  std::cout << "n=" << link.size() << " nnz=" << link.num_linkages() << " sum_indeg_outdeg=" << turns
            << (consistent ? " ok" : " MISMATCH") << "\n";
  if (!consistent) throw grnn::NumericError("linkage count disagrees with the turn count");
  return kExitOk;
}

// --- simulate ---------------------------------------------------------------

int cmd_simulate(const GraphArgs& g, Eigen::Index length, const grnn::SimulationParams& p, const std::string& out) {
  const auto link = grnn::transform(grnn::load_road_network(g.nodes, g.edges));
  const auto panel = grnn::simulate_diffusion(link, length, p);
  const auto dir = prepare_out(out);
  grnn::text::write_file((dir / "panel.csv").string(), grnn::format_panel(panel));
  auto m = manifest("simulate");
  m["inputs"] = {{"nodes", g.nodes}, {"edges", g.edges}};
  m["graph_hash"] = graph_hash(link);
  m["data_hash"] = data_hash(panel);
  m["length"] = length;
  m["simulation"] = simulation_json(p);
  m["synthetic"] = true;
  write_json(dir / "manifest.json", m);
  std::cout << "simulated " << panel.values.rows() << " segments x " << panel.values.cols() << " intervals\n";
  return kExitOk;
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  GraphArgs graph;
  std::string panel;
  std::string out;
  double split = 0.75;
  Eigen::Index period = 144;
  std::string optimizer = "sgd";
  std::optional<std::int64_t> stop_after;
  std::string resume;
};

int cmd_train(const TrainArgs& a, grnn::TrainConfig cfg) {
  const auto link = grnn::transform(grnn::load_road_network(a.graph.nodes, a.graph.edges));
  const auto panel = grnn::load_panel(a.panel, link);
  const auto L = panel.values.cols();

  std::optional<grnn::OnlinePredictor> predictor;
  grnn::Normalizer normalizer;
  double split = a.split;
  if (!a.resume.empty()) {
    const auto ckpt = grnn::load_checkpoint(a.resume);
    if (!ckpt.normalizer) throw grnn::ValidationError("checkpoint carries no normalizer; cannot resume");
    normalizer = *ckpt.normalizer;
    split = grnn::RecordView(ckpt.extra).get<double>("run.split");
    predictor.emplace(grnn::OnlinePredictor::restore(ckpt, link));
    cfg = predictor->config();
  } else {
    cfg.optimizer = grnn::parse_optimizer(a.optimizer);
    if (L < static_cast<Eigen::Index>(cfg.window) + 1) {
      throw grnn::ValidationError("panel has " + std::to_string(L) + " intervals; need at least T + 1 = " +
                                  std::to_string(cfg.window + 1));
    }
    normalizer = grnn::fit_normalizer(panel, split);
    predictor.emplace(link, cfg);
  }

  const auto scaled = normalizer.apply(panel.values);
  const Eigen::Index begin = predictor->arrivals();
  if (begin > L) throw grnn::ValidationError("checkpoint is past the end of the panel");
  Eigen::Index end = L;
  if (a.stop_after) end = std::clamp<Eigen::Index>(*a.stop_after, begin, L);
  const auto vstart = grnn::validation_start(L, split);
  const auto result = grnn::replay(*predictor, scaled.values, begin, end, vstart);

  const auto dir = prepare_out(a.out);
  const Eigen::MatrixXd predicted = normalizer.invert(result.predictions);
  const Eigen::MatrixXd truth = grnn::select_columns(panel.values, result.intervals);
  {
    std::ostringstream csv;
    csv << "interval,segment_id,prediction,truth\n";
    for (std::size_t k = 0; k < result.intervals.size(); ++k) {
      for (Eigen::Index j = 0; j < predicted.rows(); ++j) {
        const auto col = static_cast<Eigen::Index>(k);
        csv << panel.first_interval + result.intervals[k] << ',' << panel.segments[static_cast<std::size_t>(j)] << ','
            << grnn::text::format_double(predicted(j, col)) << ',' << grnn::text::format_double(truth(j, col))
            << '\n';
      }
    }
    grnn::text::write_file((dir / "predictions.csv").string(), csv.str());
  }

  auto ckpt = predictor->snapshot(normalizer);
  ckpt.extra.push_back({"run.split", split});
  grnn::save_checkpoint((dir / "checkpoint.bin").string(), ckpt);

  json report = {{"complete", end == L}, {"first_arrival", begin}, {"last_arrival", end},
                 {"validation_start", vstart}, {"clamped_entries", scaled.clamped}, {"units", "original"}};
  if (!result.intervals.empty()) {
    const auto g = grnn::evaluate(truth, predicted);
    const auto ha = grnn::evaluate(truth, grnn::select_columns(grnn::historical_average(panel.values, a.period),
                                                               result.intervals));
    const auto pers = grnn::evaluate(truth, grnn::select_columns(grnn::persistence(panel.values), result.intervals));
    report["grnn"] = report_json(g);
    report["historical_average"] = report_json(ha);
    report["persistence"] = report_json(pers);
    std::ostringstream seg;
    seg << "segment_id,grnn_mse,historical_average_mse,persistence_mse\n";
    for (Eigen::Index j = 0; j < g.per_segment_mse.size(); ++j) {
      seg << panel.segments[static_cast<std::size_t>(j)] << ',' << grnn::text::format_double(g.per_segment_mse(j))
          << ',' << grnn::text::format_double(ha.per_segment_mse(j)) << ','
          << grnn::text::format_double(pers.per_segment_mse(j)) << '\n';
    }
    grnn::text::write_file((dir / "per_segment.csv").string(), seg.str());
    std::cout << "validation intervals=" << g.intervals << " mse=" << g.mse << " vd=" << g.vd
              << " ha_mse=" << ha.mse << " persistence_mse=" << pers.mse << "\n";
  } else {
    std::cout << "no validation intervals in arrivals [" << begin << ", " << end << ")\n";
  }
  write_json(dir / "report.json", report);

  auto m = manifest("train");
  m["inputs"] = {{"nodes", a.graph.nodes}, {"edges", a.graph.edges}, {"panel", a.panel}, {"resume", a.resume}};
  m["config"] = config_json(cfg);
  m["split"] = split;
  m["period"] = a.period;
  m["graph_hash"] = graph_hash(link);
  m["data_hash"] = data_hash(panel);
  m["normalizer"] = {{"min", normalizer.min}, {"max", normalizer.max}, {"lo", normalizer.lo}, {"hi", normalizer.hi}};
  m["clamped"] = scaled.clamped > 0;
  m["clamped_entries"] = scaled.clamped;
  write_json(dir / "manifest.json", m);
  return kExitOk;
}

// --- gradcheck --------------------------------------------------------------

struct GradcheckArgs {
  Eigen::Index hidden = 4;
  Eigen::Index nodes = 5;
  std::size_t steps = 4;
  double alpha = 0.5;
  std::uint64_t seed = 0;
  double epsilon = 1e-4;
  double tolerance = 1e-4;
  double floor = 1e-7;
  bool corrupt = false;
};

int cmd_gradcheck(const GradcheckArgs& a) {
  const auto inst = grnn::make_gradcheck_instance(a.hidden, a.nodes, a.steps, a.alpha, a.seed);
  auto analytic = grnn::analytic_gradient(inst);
  // Test hook: perturb one analytic entry so the comparison must fail.
  if (a.corrupt) analytic.weights.update_state(0, 0) += 1e-2 * (1.0 + std::abs(analytic.weights.update_state(0, 0)));
  const auto numeric = grnn::numeric_gradient(inst, a.epsilon);
  const auto cmp = grnn::compare_gradients(analytic, numeric, a.tolerance, a.floor);

  std::cout << "parameter,entries,failures,worst_relative,worst_absolute\n";
  for (const auto& f : cmp.fields) {
    std::cout << f.name << ',' << f.entries << ',' << f.failures << ',' << f.worst_relative << ',' << f.worst_absolute
              << '\n';
  }
  std::cout << (cmp.passed() ? "PASS" : "FAIL") << " worst_relative=" << cmp.worst_relative()
            << " tolerance=" << a.tolerance << "\n";
  return cmp.passed() ? kExitOk : kExitNumeric;
}

// --- bench ------------------------------------------------------------------

int cmd_bench(const grnn::BenchSettings& s, const std::string& out) {
  const auto rows = grnn::complexity_bench(s);
  const auto table = grnn::format_bench(rows);
  std::cout << table;
  if (!out.empty()) {
    const auto dir = prepare_out(out);
    grnn::text::write_file((dir / "bench.csv").string(), table);
    auto m = manifest("bench");
    m["bench"] = {{"sizes", s.sizes}, {"hidden", s.hidden}, {"window", s.window}, {"epochs", s.epochs},
                  {"warmup", s.warmup}, {"steps", s.steps}, {"seed", s.seed}};
    write_json(dir / "manifest.json", m);
  }
  return kExitOk;
}

void add_graph_options(CLI::App* cmd, GraphArgs& g) {
  cmd->add_option("--nodes", g.nodes, "Intersections CSV (vertex_id,lng,lat)")->required();
  cmd->add_option("--edges", g.edges, "Segments CSV (segment_id,init_vertex,term_vertex)")->required();
}

void add_train_options(CLI::App* cmd, grnn::TrainConfig& cfg) {
  cmd->add_option("--alpha", cfg.alpha, "Propagation weight alpha in A' = alpha*A + I")->capture_default_str();
  cmd->add_option("--window", cfg.window, "Truncation window T")->capture_default_str();
  cmd->add_option("--hidden", cfg.hidden, "Hidden dimension D")->capture_default_str();
  cmd->add_option("--epochs", cfg.epochs, "Updates per arrival")->capture_default_str();
  cmd->add_option("--lr", cfg.lr, "Learning rate")->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Initialisation seed")->capture_default_str();
  cmd->add_flag("--reinit-hidden", cfg.reinit_hidden, "Fresh hidden state for every window instead of carrying it");
  cmd->add_option("--hidden-stddev", cfg.hidden_stddev, "Std-dev of the initial hidden state")->capture_default_str();
  cmd->add_option("--weight-stddev", cfg.weight_stddev, "Std-dev of the initial weights")->capture_default_str();
  cmd->add_option("--clip-norm", cfg.clip_norm, "Gradient norm cap (0 = off)")->capture_default_str();
  cmd->add_option("--divergence-factor", cfg.divergence_factor, "Loss growth that counts as divergence")
      ->capture_default_str();
  cmd->add_option("--divergence-patience", cfg.divergence_patience, "Consecutive arrivals before aborting")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  g_argv.assign(argv, argv + argc);
  CLI::App app{"GRNN traffic prediction on linkage networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", GRNN_VERSION);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "Write a synthetic road network");
  generate->add_option("--kind", gen.kind, "chain | ring | ring2 | grid | random")->capture_default_str();
  generate->add_option("--segments", gen.segments, "Segment count (chain, random: default 20; grid: truncation)");
  generate->add_option("--rows", gen.rows, "Grid rows")->capture_default_str();
  generate->add_option("--cols", gen.cols, "Grid columns")->capture_default_str();
  generate->add_option("--intersections", gen.intersections, "Intersections (ring, random)")->capture_default_str();
  generate->add_option("--seed", gen.seed, "Seed (random)")->capture_default_str();
  generate->add_option("--out", gen.out, "Output directory")->required();

  GraphArgs tgraph;
  std::string tout;
  auto* transform = app.add_subcommand("transform", "Build the linkage network of a road network");
  add_graph_options(transform, tgraph);
  transform->add_option("--out", tout, "Output directory")->required();

  GraphArgs sgraph;
  grnn::SimulationParams sim;
  Eigen::Index length = 144 * 30;
  std::string sout;
  auto* simulate = app.add_subcommand("simulate", "Simulate a synthetic diffusion panel");
  add_graph_options(simulate, sgraph);
  simulate->add_option("--length", length, "Intervals to simulate")->capture_default_str();
  simulate->add_option("--beta", sim.beta, "Upstream mixing weight")->capture_default_str();
  simulate->add_option("--noise", sim.noise, "Noise std-dev")->capture_default_str();
  simulate->add_option("--amplitude", sim.amplitude, "Daily cycle amplitude")->capture_default_str();
  simulate->add_option("--period", sim.period, "Intervals per day")->capture_default_str();
  simulate->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  simulate->add_option("--out", sout, "Output directory")->required();

  TrainArgs targs;
  grnn::TrainConfig cfg;
  auto* train = app.add_subcommand("train", "Online training and prediction over a panel");
  add_graph_options(train, targs.graph);
  train->add_option("--panel", targs.panel, "Panel CSV (segment_id,interval_index,value)")->required();
  add_train_options(train, cfg);
  train->add_option("--optimizer", targs.optimizer, "sgd | adam")->capture_default_str();
  train->add_option("--split", targs.split, "Fraction of intervals before validation")->capture_default_str();
  train->add_option("--period", targs.period, "Intervals per day for the historical average")->capture_default_str();
  train->add_option("--stop-after", targs.stop_after, "Stop once this many arrivals have been consumed");
  train->add_option("--resume", targs.resume, "Continue from a checkpoint written by an earlier run");
  train->add_option("--out", targs.out, "Output directory")->required();

  GradcheckArgs gc;
  auto* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  gradcheck->add_option("--hidden", gc.hidden, "Hidden dimension D")->capture_default_str();
  gradcheck->add_option("--segments", gc.nodes, "Linkage-network nodes n")->capture_default_str();
  gradcheck->add_option("--window", gc.steps, "Steps T")->capture_default_str();
  gradcheck->add_option("--alpha", gc.alpha, "Propagation weight")->capture_default_str();
  gradcheck->add_option("--seed", gc.seed, "Instance seed")->capture_default_str();
  gradcheck->add_option("--epsilon", gc.epsilon, "Central-difference step")->capture_default_str();
  gradcheck->add_option("--tolerance", gc.tolerance, "Relative tolerance")->capture_default_str();
  gradcheck->add_flag("--corrupt", gc.corrupt, "Perturb one analytic entry (self-test of the checker)");

  grnn::BenchSettings bs;
  std::string bout;
  auto* bench = app.add_subcommand("bench", "Joint vs per-segment training cost");
  bench->add_option("--sizes", bs.sizes, "Segment counts")->delimiter(',')->capture_default_str();
  bench->add_option("--hidden", bs.hidden, "Hidden dimension D")->capture_default_str();
  bench->add_option("--window", bs.window, "Window T")->capture_default_str();
  bench->add_option("--epochs", bs.epochs, "Updates per arrival")->capture_default_str();
  bench->add_option("--steps", bs.steps, "Timed arrivals; the median is reported")->capture_default_str();
  bench->add_option("--seed", bs.seed, "Seed")->capture_default_str();
  bench->add_option("--out", bout, "Output directory (optional)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  try {
    if (*generate) return cmd_generate(gen);
    if (*transform) return cmd_transform(tgraph, tout);
    if (*simulate) return cmd_simulate(sgraph, length, sim, sout);
    if (*train) return cmd_train(targs, cfg);
    if (*gradcheck) return cmd_gradcheck(gc);
    if (*bench) return cmd_bench(bs, bout);
  } catch (const grnn::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitInvalid;
}
