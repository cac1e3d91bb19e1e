#include "parinv/parinv.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

namespace {

using namespace parinv;

bool is_program_json(const Json& j) {
  return j.is_object() && j.contains("format") &&
         j.at("format") == "parinv-program";
}

std::map<std::string, Shape> parse_shapes(const std::vector<std::string>& specs) {
  std::map<std::string, Shape> out;
  for (const std::string& s : specs) {
    auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ExecError(ExecError::Code::InvalidArgument,
                      "--input-shape wants name=DIM[xDIM...], got '" + s + "'");
    std::string name = s.substr(0, eq);
    Shape shape;
    std::string dims = s.substr(eq + 1);
    if (!dims.empty()) {
      std::size_t pos = 0;
      while (pos < dims.size()) {
        auto x = dims.find('x', pos);
        std::string d = dims.substr(pos, x == std::string::npos ? x : x - pos);
        shape.push_back(std::stoll(d));
        pos = x == std::string::npos ? dims.size() : x + 1;
      }
    }
    out[name] = std::move(shape);
  }
  return out;
}

std::map<std::string, Value> load_values(const std::string& path) {
  return values_from_json(load_json(path));
}

// outputs may contain ⊥, which has no JSON form; split them out by name
Json outputs_json(const std::map<std::string, Value>& outs,
                  Json* undefined = nullptr) {
  Json defined = Json::object();
  Json undef = Json::array();
  for (const auto& [name, v] : outs) {
    if (v.is_undefined())
      undef.push_back(name);
    else
      defined[name] = value_to_json(v);
  }
  if (undefined) *undefined = std::move(undef);
  return defined;
}

Json taps_json(const std::vector<TapReport>& taps) {
  Json arr = Json::array();
  for (const TapReport& t : taps)
    arr.push_back(Json{{"origin", t.origin + 1},
                       {"label", t.label},
                       {"distance", t.distance}});
  return arr;
}

Json loss_report_json(const LossReport& rep, bool with_identity) {
  Json undef;
  Json j{{"outputs", outputs_json(rep.outputs, &undef)},
         {"domain_loss", rep.domain_loss},
         {"taps", taps_json(rep.per_tap)}};
  if (!undef.empty()) j["undefined"] = undef;
  if (with_identity) j["identity_loss"] = rep.identity_loss;
  return j;
}

Json program_summary(const InverseProgram& ip) {
  Json spaces = Json::array();
  for (const Domain& d : ip.layout.slot_spaces) spaces.push_back(d.spelling());
  return Json{{"theta_slots", ip.layout.total()},
              {"slot_spaces", std::move(spaces)},
              {"inverse_ops", ip.inverse.ops_topo().size()},
              {"pins", ip.pins.size()},
              {"reduced_slots", ip.reductions.size()},
              {"totalized", ip.totalized}};
}

void emit(const Json& j, const std::string& out_path) {
  if (!out_path.empty()) save_json(out_path, j);
  std::cout << j.dump(2) << "\n";
}

LossFn make_loss(const std::string& spec) {
  if (spec == "abs-sum") return abs_sum_loss();
  if (spec.rfind("target:", 0) == 0)
    return target_loss(load_values(spec.substr(7)));
  throw ExecError(ExecError::Code::InvalidArgument,
                  "--loss wants abs-sum or target:<values.json>, got '" + spec +
                      "'");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"construct, totalize, and solve parametric program inverses"};
  app.set_version_flag("--version", "parinv 1.0.0");
  app.require_subcommand(1);

  // validate
  std::string v_graph;
  auto* c_validate = app.add_subcommand("validate", "check a graph file");
  c_validate->add_option("graph", v_graph, "graph JSON")->required();
  c_validate->callback([&] {
    Graph g = graph_from_json(load_json(v_graph));
    Json ins = Json::array(), outs = Json::array();
    for (NodeId n : g.input_nodes()) ins.push_back(g.label(n).name);
    for (NodeId n : g.output_nodes()) outs.push_back(g.label(n).name);
    std::cout << Json{{"nodes", g.node_count()},
                      {"ops", g.ops_topo().size()},
                      {"inputs", std::move(ins)},
                      {"outputs", std::move(outs)},
                      {"constants", g.constant_nodes().size()}}
                     .dump(2)
              << "\n";
  });

  // invert
  std::string i_graph, i_out;
  std::vector<std::string> i_shapes;
  bool i_layout = false, i_annotations = false;
  auto* c_invert = app.add_subcommand("invert", "construct the parametric inverse");
  c_invert->add_option("graph", i_graph, "forward graph JSON")->required();
  c_invert->add_option("-o,--out", i_out, "inverse program JSON to write");
  c_invert->add_option("--input-shape", i_shapes,
                       "tensor input shape hint, name=DIM[xDIM...]");
  c_invert->add_flag("--layout", i_layout, "include the full θ layout");
  c_invert->add_flag("--dump-annotations", i_annotations,
                     "include propagation results per node");
  c_invert->callback([&] {
    Graph g = insert_dupl(graph_from_json(load_json(i_graph)));
    Annotations ann = propagate(g, parse_shapes(i_shapes));
    InverseProgram ip = invert(g, ann);
    Json j = program_summary(ip);
    if (i_layout) j["layout"] = program_to_json(ip)["layout"];
    if (i_annotations) {
      Json a = Json::object();
      for (NodeId n = 0; n < g.node_count(); ++n) {
        if (g.is_op(n)) continue;
        Json e = Json::object();
        if (ann[n].shape && !ann[n].shape->empty())
          e["shape"] = *ann[n].shape;
        if (ann[n].known && !ann[n].known->is_undefined())
          e["known"] = value_to_json(*ann[n].known);
        if (!e.empty()) a[std::to_string(n + 1)] = std::move(e);
      }
      j["annotations"] = std::move(a);
    }
    if (!i_out.empty()) save_json(i_out, program_to_json(ip));
    std::cout << j.dump(2) << "\n";
  });

  // reduce
  std::string r_prog, r_out;
  bool r_report = false;
  auto* c_reduce = app.add_subcommand("reduce", "eliminate equality-determined θ slots");
  c_reduce->add_option("program", r_prog, "inverse program JSON")->required();
  c_reduce->add_option("-o,--out", r_out, "reduced program JSON to write");
  c_reduce->add_flag("--report", r_report, "include one entry per eliminated slot");
  c_reduce->callback([&] {
    InverseProgram ip = program_from_json(load_json(r_prog));
    std::size_t before = ip.layout.total();
    ip = eliminate_equalities(ip);
    Json j{{"slots_before", before}, {"slots_after", ip.layout.total()}};
    if (r_report) {
      Json steps = Json::array();
      for (const ReductionStep& s : ip.reductions)
        steps.push_back(Json{{"slot", s.original_slot}, {"gamma", s.expr}});
      j["steps"] = std::move(steps);
    }
    if (!r_out.empty()) save_json(r_out, program_to_json(ip));
    std::cout << j.dump(2) << "\n";
  });

  // totalize
  std::string t_prog, t_out;
  auto* c_totalize = app.add_subcommand("totalize", "insert contractions so every θ works");
  c_totalize->add_option("program", t_prog, "inverse program JSON")->required();
  c_totalize->add_option("-o,--out", t_out, "totalized program JSON to write");
  c_totalize->callback([&] {
    InverseProgram ip = program_from_json(load_json(t_prog));
    std::size_t before = ip.inverse.ops_topo().size();
    ip = totalize(ip);
    if (!t_out.empty()) save_json(t_out, program_to_json(ip));
    std::cout << Json{{"contractions", ip.inverse.ops_topo().size() - before},
                      {"totalized", true}}
                     .dump(2)
              << "\n";
  });

  // run
  std::string run_graph, run_inputs, run_out;
  auto* c_run = app.add_subcommand("run", "evaluate a forward graph");
  c_run->add_option("graph", run_graph, "graph JSON")->required();
  c_run->add_option("--inputs", run_inputs, "input values JSON")->required();
  c_run->add_option("-o,--out", run_out, "write the result here too");
  c_run->callback([&] {
    Graph g = graph_from_json(load_json(run_graph));
    ForwardRun fr = run_forward(g, load_values(run_inputs));
    Json undef;
    Json j{{"all_defined", fr.all_defined},
           {"outputs", outputs_json(fr.outputs, &undef)}};
    if (!undef.empty()) j["undefined"] = undef;
    emit(j, run_out);
  });

  // runinv
  std::string ri_prog, ri_y, ri_theta_file, ri_out;
  std::string ri_theta;
  auto* c_runinv = app.add_subcommand("runinv", "evaluate an inverse program at (y, θ)");
  c_runinv->add_option("program", ri_prog, "inverse program JSON")->required();
  c_runinv->add_option("--y", ri_y, "target output values JSON")->required();
  c_runinv->add_option("--theta", ri_theta, "θ vector as inline JSON, e.g. [1,0.5]");
  c_runinv->add_option("--theta-file", ri_theta_file, "θ vector JSON file");
  c_runinv->add_option("-o,--out", ri_out, "write the report here too");
  c_runinv->callback([&] {
    InverseProgram ip = program_from_json(load_json(ri_prog));
    std::vector<double> theta;
    if (!ri_theta.empty())
      theta = Json::parse(ri_theta).get<std::vector<double>>();
    else if (!ri_theta_file.empty())
      theta = load_json(ri_theta_file).get<std::vector<double>>();
    LossReport rep = run_inverse(ip, load_values(ri_y), theta);
    emit(loss_report_json(rep, true), ri_out);
  });

  // solve
  std::string s_in, s_y, s_out, s_loss = "abs-sum";
  std::vector<std::string> s_shapes;
  bool s_no_reduce = false, s_no_totalize = false;
  SolveConfig s_cfg;
  auto* c_solve = app.add_subcommand(
      "solve", "pick θ so the inverse hits y (forward graph or program input)");
  c_solve->add_option("input", s_in, "forward graph or inverse program JSON")->required();
  c_solve->add_option("--y", s_y, "target output values JSON")->required();
  c_solve->add_option("--loss", s_loss, "abs-sum or target:<values.json>");
  c_solve->add_option("--seed", s_cfg.seed, "search seed");
  c_solve->add_option("--restarts", s_cfg.restarts, "restart count");
  c_solve->add_option("--max-evals", s_cfg.max_evals, "evaluations per restart");
  c_solve->add_option("--input-shape", s_shapes,
                      "tensor input shape hint, name=DIM[xDIM...]");
  c_solve->add_flag("--no-reduce", s_no_reduce, "skip equality elimination");
  c_solve->add_flag("--no-totalize", s_no_totalize, "skip totalization");
  c_solve->add_option("-o,--out", s_out, "write the result here too");
  c_solve->callback([&] {
    Json j = load_json(s_in);
    InverseProgram ip;
    if (is_program_json(j)) {
      ip = program_from_json(j);
    } else {
      PipelineOptions opt;
      opt.reduce = !s_no_reduce;
      opt.totalize = !s_no_totalize;
      opt.input_shapes = parse_shapes(s_shapes);
      ip = prepare_program(graph_from_json(j), opt);
    }
    SolveResult res = solve_theta(ip, load_values(s_y), make_loss(s_loss), s_cfg);
    Json out{{"theta", res.theta},
             {"objective", res.objective},
             {"user_loss", res.user_loss},
             {"domain_loss", res.domain_loss},
             {"identity_loss", res.identity_loss},
             {"outputs", outputs_json(res.outputs)},
             {"evals_used", res.evals_used}};
    emit(out, s_out);
  });

  // bench
  std::string b_mode, b_dir;
  std::uint64_t b_seed = 0;
  int b_count = 4, b_links = 3, b_samples = 4, b_ops = 6;
  SolveConfig b_cfg;
  auto* c_bench = app.add_subcommand("bench", "benchmark builders and harnesses");
  c_bench->add_option("mode", b_mode, "ik | random | render1d | compare")
      ->required()
      ->check(CLI::IsMember({"ik", "random", "render1d", "compare"}));
  c_bench->add_option("--seed", b_seed, "generator seed");
  c_bench->add_option("--out", b_dir, "output directory")->required();
  c_bench->add_option("--count", b_count, "graphs (random) or problems (compare)");
  c_bench->add_option("--links", b_links, "chain length for ik");
  c_bench->add_option("--samples", b_samples, "sample count for render1d");
  c_bench->add_option("--ops", b_ops, "op count for random graphs");
  c_bench->add_option("--restarts", b_cfg.restarts, "solver restarts (compare)");
  c_bench->add_option("--max-evals", b_cfg.max_evals, "solver evals per restart (compare)");
  c_bench->callback([&] {
    std::filesystem::create_directories(b_dir);
    auto path = [&](const std::string& f) {
      return (std::filesystem::path(b_dir) / f).string();
    };
    Json written = Json::array();
    if (b_mode == "ik") {
      std::string f = path("ik" + std::to_string(b_links) + ".json");
      save_json(f, graph_to_json(ik_chain_graph(b_links)));
      written.push_back(f);
    } else if (b_mode == "random") {
      for (int i = 0; i < b_count; ++i) {
        std::uint64_t s = b_seed + static_cast<std::uint64_t>(i);
        GeneratedProblem gp = gen_random(s, b_ops);
        std::string f = path("random_" + std::to_string(s) + ".json");
        std::string fi = path("random_" + std::to_string(s) + "_inputs.json");
        save_json(f, graph_to_json(gp.graph));
        save_json(fi, values_to_json(gp.sample));
        written.push_back(f);
        written.push_back(fi);
      }
    } else if (b_mode == "render1d") {
      std::string f = path("render1d_" + std::to_string(b_samples) + ".json");
      save_json(f, graph_to_json(render1d_graph(b_samples)));
      written.push_back(f);
    } else {
      CompareReport rep = compare_harness(b_seed, b_count, b_cfg);
      std::string f = path("compare.csv");
      std::ofstream os(f, std::ios::binary);
      os << rep.to_csv();
      if (!os)
        throw ExecError(ExecError::Code::InvalidArgument, "cannot write " + f);
      written.push_back(f);
    }
    std::cout << Json{{"written", std::move(written)}}.dump(2) << "\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e); // prints help or the usage complaint
    return code == 0 ? 0 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
