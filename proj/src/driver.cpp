#include "fluxrec/driver.hpp"

#include "fluxrec/quadrature.hpp"

namespace fluxrec {
namespace {

enum class Refinement { Adaptive, Uniform };

void check_inverse_crime(const InverseProblem& problem, const Mesh& mesh) {
  const Measurement* m = problem.measurement.get();
  if (m == nullptr || m->generation_levels < 0 || m->generation_triangles != mesh.triangle_count()) return;
  for (const Triangle& t : mesh.triangles()) {
    if (t.generation != m->generation_levels) return;
  }
  throw std::runtime_error("inversion mesh coincides with the measurement generation mesh (inverse crime)");
}

AdaptiveHistory run_loop(const InverseProblem& problem, const LoopConfig& config, const IterationObserver& observer,
                         Refinement refinement) {
  config.validate();
  if (!problem.initial_mesh) throw std::invalid_argument("run: problem has no initial mesh");

  AdaptiveHistory history;
  std::vector<OptimalTriplet> triplets;
  MeshPtr mesh = problem.initial_mesh;
  std::optional<TraceFunction> warm;

  for (int k = 0;; ++k) {
    check_inverse_crime(problem, *mesh);
    OptimalTriplet triplet;
    SolveReport report;
    std::optional<DiscreteSystem> system;
    try {
      system.emplace(mesh, problem.data, config.solver);
      triplet = system->solve_optimality(warm, &report);
    } catch (const SolverError& e) {
      history.final_mesh = mesh;
      throw AdaptiveRunError(std::string("SOLVE failed at iteration ") + std::to_string(k) + ": " + e.what(),
                             std::move(history));
    }

    const ElementIndicators indicators = estimate(triplet, problem.data);
    const std::vector<double> eta = element_eta(indicators);
    MarkingDecision decision;
    if (refinement == Refinement::Uniform) {
      decision.marked.resize(eta.size());
      for (std::size_t t = 0; t < eta.size(); ++t) decision.marked[t] = static_cast<TriangleId>(t);
      decision.strategy = config.strategy;
    } else {
      decision = mark(config.strategy, eta, config.theta, config.tol);
    }

    IterationRecord rec;
    rec.iter = k;
    rec.n_vertices = mesh->vertex_count();
    rec.n_triangles = mesh->triangle_count();
    rec.n_flux_dofs = system->trace_space()->size();
    rec.eta = indicators.eta();
    rec.eta1 = indicators.eta1();
    rec.eta2 = indicators.eta2();
    rec.osc = indicators.oscillation();
    rec.objective = system->objective(triplet.u, triplet.q);
    rec.cg_iterations = report.outer_iterations;
    rec.n_marked = decision.marked.size();
    history.records.push_back(rec);
    if (observer) observer(IterationView{k, mesh, triplet, indicators, decision});

    history.final_mesh = mesh;
    history.final_triplet = triplet;
    if (config.record_errors) triplets.push_back(triplet);

    std::optional<StopReason> stop;
    if (refinement == Refinement::Adaptive && config.strategy == MarkingStrategy::Equidistribution) {
      if (decision.terminate) stop = StopReason::Terminated;
    } else if (rec.eta <= config.tol) {
      stop = StopReason::Tolerance;
    }
    if (!stop && decision.marked.empty()) stop = StopReason::ZeroEstimator;
    if (!stop && k + 1 >= config.max_iters) stop = StopReason::MaxIterations;
    MeshPtr next;
    if (!stop) {
      next = bisect(mesh, decision.marked);
      if (next->triangle_count() > config.max_triangles) stop = StopReason::MaxTriangles;
    }
    if (stop) {
      history.stop_reason = *stop;
      break;
    }
    if (config.warm_start) warm = transfer_trace(triplet.q, std::make_shared<const TraceSpace>(next));
    mesh = std::move(next);
  }

  if (config.record_errors) {
    const OptimalTriplet reference =
        compute_reference(problem, history.final_mesh, config.reference_levels, config.solver);
    for (std::size_t i = 0; i < triplets.size(); ++i) history.records[i].errors = true_errors(triplets[i], &reference);
  }
  return history;
}

double h1_difference(const FeFunction& coarse, const FeFunction& fine) {
  FeFunction diff = transfer(coarse, fine.mesh);
  for (std::size_t i = 0; i < diff.values.size(); ++i) diff.values[i] -= fine.values[i];
  return norms(diff).h1;
}

}  // namespace

void LoopConfig::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw std::invalid_argument("theta must lie in [0,1]");
  if (!(tol > 0.0)) throw std::invalid_argument("TOL must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be at least 1");
  if (max_triangles < 1) throw std::invalid_argument("max_triangles must be positive");
  if (reference_levels < 0) throw std::invalid_argument("reference_levels must be non-negative");
  solver.validate();
}

std::string to_string(StopReason reason) {
  switch (reason) {
    case StopReason::Terminated:
      return "terminated";
    case StopReason::Tolerance:
      return "tolerance";
    case StopReason::MaxIterations:
      return "max_iters";
    case StopReason::MaxTriangles:
      return "max_triangles";
    case StopReason::ZeroEstimator:
      return "zero_estimator";
  }
  return "?";
}

InverseProblem make_inverse_problem(const ProblemSpec& spec, int measurement_levels) {
  auto measurement = std::make_shared<const Measurement>(generate_measurement(spec, measurement_levels));
  InverseProblem problem;
  problem.initial_mesh = build_initial_mesh(spec.domain);
  problem.data = make_problem_data(spec, measurement);
  problem.measurement = std::move(measurement);
  return problem;
}

AdaptiveHistory run_adaptive(const InverseProblem& problem, const LoopConfig& config, const IterationObserver& observer) {
  return run_loop(problem, config, observer, Refinement::Adaptive);
}

AdaptiveHistory run_uniform(const InverseProblem& problem, const LoopConfig& config, const IterationObserver& observer) {
  return run_loop(problem, config, observer, Refinement::Uniform);
}

OptimalTriplet compute_reference(const InverseProblem& problem, const MeshPtr& mesh, int levels,
                                 const SolverSettings& settings) {
  MeshPtr fine = mesh;
  for (int l = 0; l < levels; ++l) fine = bisect_all(fine);
  return DiscreteSystem(fine, problem.data, settings).solve_optimality();
}

ErrorRecord true_errors(const OptimalTriplet& triplet, const OptimalTriplet* reference) {
  if (reference == nullptr) throw std::invalid_argument("true_errors: reference missing");
  ErrorRecord e;
  e.u = h1_difference(triplet.u, reference->u);
  e.p = h1_difference(triplet.p, reference->p);
  TraceFunction q = transfer_trace(triplet.q, reference->q.space);
  for (std::size_t k = 0; k < q.values.size(); ++k) q.values[k] -= reference->q.values[k];
  e.q = l2_norm(q);
  return e;
}

ErrorRecord true_errors(const OptimalTriplet& triplet, const AnalyticReference& reference) {
  const Mesh& mesh = *triplet.u.mesh;
  auto h1_error = [&](const FeFunction& v, const ScalarField& exact, const VectorField& grad) {
    if (!exact || !grad) return kNaN;
    double sum = 0.0;
    for (std::size_t t = 0; t < mesh.triangle_count(); ++t) {
      const auto tid = static_cast<TriangleId>(t);
      const auto c = mesh.corners(tid);
      const auto& ids = mesh.triangle(tid).v;
      const Point g = gradient(mesh, tid, v.values);
      const double area = mesh.area(tid);
      for (const auto& q : quadrature::kTriangleDegree4) {
        const Point x = to_cartesian(c, q.bary);
        double vh = 0.0;
        for (std::size_t i = 0; i < 3; ++i) vh += q.bary[i] * v.values[static_cast<std::size_t>(ids[i])];
        const double dv = exact(x) - vh;
        const Point dg = grad(x) - g;
        sum += q.weight * area * (dv * dv + dot(dg, dg));
      }
    }
    return std::sqrt(sum);
  };

  ErrorRecord e;
  e.u = h1_error(triplet.u, reference.u, reference.grad_u);
  e.p = h1_error(triplet.p, reference.p, reference.grad_p);
  if (reference.q) {
    double sum = 0.0;
    const TraceSpace& space = *triplet.q.space;
    for (const Face& f : mesh.faces()) {
      if (f.tag != BoundaryTag::GammaI) continue;
      const Point a = mesh.vertex(f.v[0]);
      const Point d = mesh.vertex(f.v[1]) - a;
      const double qa = triplet.q.values[static_cast<std::size_t>(space.index_of(f.v[0]))];
      const double qb = triplet.q.values[static_cast<std::size_t>(space.index_of(f.v[1]))];
      for (const auto& g : quadrature::kGauss3) {
        const double diff = reference.q(a + g.t * d) - ((1.0 - g.t) * qa + g.t * qb);
        sum += g.weight * f.length * diff * diff;
      }
    }
    e.q = std::sqrt(sum);
  }
  return e;
}

}  // namespace fluxrec
