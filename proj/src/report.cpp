#include "rte/report.hpp"

#include <cmath>
#include <fstream>

namespace rte {

namespace {

// JSON has no infinities; they are written as null.
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

}  // namespace

Json to_json(const RunConfig& c) {
  Json j;
  j["grid"] = c.grid;
  j["n_dir"] = c.n_dir;
  j["n_s"] = c.n_s;
  j["n_ang"] = c.n_ang;
  j["s_max"] = c.s_max;
  j["step"] = c.step;
  j["fp_tol"] = c.fp_tol;
  j["max_iter"] = c.max_iter;
  j["lin_tol"] = c.lin_tol;
  j["gamma"] = c.gamma;
  j["mask_margin"] = c.mask_margin;
  j["support_radius"] = c.support_radius;
  j["u_B"] = c.u_B;
  j["T_B"] = c.T_B;
  j["alpha1"] = c.alpha1;
  j["alpha2"] = c.alpha2;
  j["delta1"] = c.delta1;
  j["delta2"] = c.delta2;
  j["allow_inadmissible"] = c.allow_inadmissible;
  j["floor"] = c.floor;
  j["noise"] = c.noise;
  j["seed"] = c.seed;
  j["trace_n_beta"] = c.trace_n_beta;
  j["trace_n_dir"] = c.trace_n_dir;
  j["sigma_phantom"] = c.sigma_phantom;
  j["mu_phantom"] = c.mu_phantom;
  return j;
}

Json to_json(const PhantomSpec& spec) {
  Json j;
  j["background"] = spec.background;
  j["support_radius"] = spec.support_radius;
  j["bumps"] = Json::array();
  for (const Bump& b : spec.bumps) {
    j["bumps"].push_back({{"center", {b.center.x(), b.center.y()}}, {"amplitude", b.amplitude}, {"width", b.width}});
  }
  return j;
}

Json to_json(const PhantomReport& rep) {
  return {{"min_on_support", rep.min_on_support},
          {"max", rep.max},
          {"holder_sup", rep.holder.sup},
          {"holder_seminorm", rep.holder.seminorm},
          {"holder_norm", rep.holder.norm()}};
}

Json to_json(const MediumBounds& b) {
  return {{"mu_m", b.mu_m}, {"mu_M", b.mu_M}, {"sigma_M", b.sigma_M}, {"diameter", b.diameter}};
}

Json to_json(const AdmissibilityReport& rep) {
  Json j;
  j["pass"] = rep.pass();
  j["bounds"] = to_json(rep.bounds);
  j["u_B_norm"] = rep.u_norm;
  j["T_B_norm"] = rep.T_norm;
  j["conditions"] = Json::array();
  for (const Condition& c : rep.conditions) {
    j["conditions"].push_back({{"name", c.name},
                               {"lhs", number(c.lhs)},
                               {"rhs", number(c.rhs)},
                               {"slack", number(c.slack())},
                               {"pass", c.pass()}});
  }
  return j;
}

Json to_json(const PositivityReport& rep) {
  return {{"pass", rep.pass()},     {"u_min", rep.u_min},       {"u_bound", rep.u_bound},
          {"u_margin", rep.u_margin()}, {"T_min", rep.T_min}, {"T_bound", rep.T_bound},
          {"T_margin", rep.T_margin()}, {"tol", rep.tol}};
}

Json to_json(const SolveDiagnostics& d) {
  Json j;
  j["iterations"] = d.iterations;
  j["update_norms"] = d.update_norms;
  j["contraction_ratios"] = d.contraction_ratios;
  j["contraction_constant"] = d.contraction_constant();
  j["final_update_norm"] = d.final_update_norm;
  j["transport_residual"] = d.transport_residual;
  j["elliptic_residual"] = d.elliptic_residual;
  j["residual_scale"] = d.residual_scale;
  j["admissibility"] = to_json(d.admissibility);
  j["positivity"] = to_json(d.positivity);
  j["warnings"] = d.warnings;
  return j;
}

Json to_json(const PipelineResult& r, bool timings) {
  Json j;
  j["stages"] = Json::array();
  for (const StageReport& s : r.stages) {
    Json m;
    for (const auto& [k, v] : s.metrics) m[k] = number(v);
    Json stage = {{"name", s.name}};
    if (timings) stage["seconds"] = s.seconds;
    stage["metrics"] = m;
    j["stages"].push_back(stage);
  }
  Json t = Json::object();
  for (const auto& [k, v] : r.truth_metrics) t[k] = number(v);
  j["truth_metrics"] = t;
  return j;
}

Json to_json(const StabilityReport& rep) {
  Json j;
  j["rows"] = Json::array();
  for (const StabilityRow& r : rep.rows) {
    j["rows"].push_back({{"t", r.t}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"ratio", r.ratio()}});
  }
  j["band"] = rep.band();
  return j;
}

Json to_json(const Error& e) {
  Json j;
  j["error"] = e.kind();
  j["exit_code"] = static_cast<int>(e.code());
  j["message"] = e.what();
  if (!e.stage().empty()) j["stage"] = e.stage();
  if (const auto* it = dynamic_cast<const IterationError*>(&e)) j["ratios"] = it->ratios();
  if (const auto* so = dynamic_cast<const SolverError*>(&e)) j["residual"] = so->residual();
  return j;
}

void write_json(const Json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write to '" + path + "' failed");
}

}  // namespace rte
