#include "platoon/validation.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "platoon/controller.hpp"
#include "platoon/error.hpp"
#include "platoon/lqr.hpp"
#include "platoon/simulator.hpp"
#include "platoon/structured.hpp"

namespace platoon {

namespace {

double inf_norm(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double inf_norm(const Matrix& M) { return M.size() ? M.cwiseAbs().maxCoeff() : 0.0; }

Matrix random_matrix(Rng& rng, Eigen::Index r, Eigen::Index c) {
  std::normal_distribution<double> z;
  Matrix M(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = z(rng);
  return M;
}

Matrix random_pd(Rng& rng, Eigen::Index n, double floor = 0.1) {
  const Matrix G = random_matrix(rng, n, n);
  return G * G.transpose() + floor * Matrix::Identity(n, n);
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// Runs `body` and stamps the elapsed time.
CheckResult timed(CheckResult r, const std::function<void(CheckResult&)>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("threw: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

double relative_gap(const Vector& a, const Vector& b) {
  return inf_norm(Vector(a - b)) / std::max(inf_norm(b), 1e-300);
}

}  // namespace

double oracle_penalty_steady(const Matrix& A, const Matrix& B, const Matrix& W,
                             const Matrix& H, const Matrix& L, const Matrix& F,
                             const Matrix& M) {
  const auto n = A.rows();
  // u1 - L x1 = Psi [w(k-1); w(k-2)].
  Matrix Psi(L.rows(), 2 * n);
  Psi << F - L, M - L * (A + B * F);
  Matrix Sigma = Matrix::Zero(2 * n, 2 * n);
  Sigma.topLeftCorner(n, n) = W;
  Sigma.bottomRightCorner(n, n) = W;
  return (H * Psi * Sigma * Psi.transpose()).trace();
}

double oracle_penalty_finite(const Matrix& A, const Matrix& B, const Matrix& W,
                             const std::vector<Matrix>& H,
                             const std::vector<Matrix>& L,
                             const std::vector<Matrix>& F,
                             const std::vector<Matrix>& M) {
  const std::size_t N = F.size();
  const auto n = A.rows();
  const auto m = B.cols();
  // eta = [w(-1); w(0); ...; w(N-2)], block j holds w(j-1).
  const auto dim = static_cast<Eigen::Index>(N) * n;
  Matrix Sigma = Matrix::Zero(dim, dim);
  for (std::size_t j = 0; j < N; ++j)
    Sigma.block(static_cast<Eigen::Index>(j) * n, static_cast<Eigen::Index>(j) * n, n, n) = W;
  double J = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    Matrix Psi = Matrix::Zero(m, dim);
    // x1(k) = w(k-1) + (A + B F(k-1)) w(k-2); u1(k) = F(k) w(k-1) + M(k) w(k-2)
    Psi.block(0, static_cast<Eigen::Index>(k) * n, m, n) = F[k] - L[k];
    if (k >= 1)
      Psi.block(0, static_cast<Eigen::Index>(k - 1) * n, m, n) =
          M[k] - L[k] * (A + B * F[k - 1]);
    J += (H[k] * Psi * Sigma * Psi.transpose()).trace();
  }
  return J;
}

Vector fd_quadratic_minimizer(const std::function<double(const Vector&)>& J,
                              Eigen::Index dim, double h) {
  const Vector zero = Vector::Zero(dim);
  const double J0 = J(zero);
  Vector g(dim);
  Vector plus(dim), minus(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Vector e = zero;
    e(i) = h;
    plus(i) = J(e);
    minus(i) = J(-e);
    g(i) = (plus(i) - minus(i)) / (2.0 * h);
  }
  Matrix Hs(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    Hs(i, i) = (plus(i) - 2.0 * J0 + minus(i)) / (h * h);
    for (Eigen::Index j = 0; j < i; ++j) {
      Vector e = zero;
      e(i) = h;
      e(j) = h;
      const double pp = J(e);
      // J(h e_i + h e_j) = J0 + h(g_i + g_j) + h^2/2 (H_ii + H_jj) + h^2 H_ij
      const double hij = (pp - plus(i) - plus(j) + J0) / (h * h);
      Hs(i, j) = Hs(j, i) = hij;
    }
  }
  return Hs.ldlt().solve(-g);
}

OracleMatch match_steady_gains(const LinearPlatoonModel& model,
                               const CostSpec& cost, bool flip_sign) {
  RiccatiSolution ric = solve_dare(model.A, model.B, cost.Q, cost.R);
  const Matrix L = ric.L;
  if (flip_sign) ric.L = -ric.L;
  const DelayedGains g = synthesize_from_riccati(model, ric);

  const ChainMasks& masks = g.masks;
  const auto nF = static_cast<Eigen::Index>(masks.F.count());
  const auto nM = static_cast<Eigen::Index>(masks.M.count());
  auto J = [&](const Vector& d) {
    return oracle_penalty_steady(model.A, model.B, model.W, ric.H, L,
                                 scatter(d.head(nF), masks.F),
                                 scatter(d.tail(nM), masks.M));
  };
  OracleMatch out;
  out.oracle = fd_quadratic_minimizer(J, nF + nM);
  out.synthesized.resize(nF + nM);
  out.synthesized << vec_star(g.F, masks.F), vec_star(g.M, masks.M);
  out.relative_error = relative_gap(out.synthesized, out.oracle);
  return out;
}

OracleMatch match_finite_gains(const LinearPlatoonModel& model,
                               const CostSpec& cost, std::size_t N) {
  const GainSchedule s = synthesize_finite(model, cost, N);
  const ChainMasks masks = chain_masks(model.partition);
  const auto nF = static_cast<Eigen::Index>(masks.F.count());
  const auto nM = static_cast<Eigen::Index>(masks.M.count());
  const auto Ni = static_cast<Eigen::Index>(N);
  const Eigen::Index dim = Ni * nF + (Ni - 1) * nM;

  // d = [vec*F(0) .. vec*F(N-1), vec*M(1) .. vec*M(N-1)]
  auto unpack = [&](const Vector& d, std::vector<Matrix>& F, std::vector<Matrix>& M) {
    F.assign(N, Matrix());
    M.assign(N, Matrix::Zero(model.m(), model.n()));
    for (std::size_t k = 0; k < N; ++k)
      F[k] = scatter(d.segment(static_cast<Eigen::Index>(k) * nF, nF), masks.F);
    for (std::size_t k = 1; k < N; ++k)
      M[k] = scatter(d.segment(Ni * nF + static_cast<Eigen::Index>(k - 1) * nM, nM), masks.M);
  };
  auto J = [&](const Vector& d) {
    std::vector<Matrix> F, M;
    unpack(d, F, M);
    return oracle_penalty_finite(model.A, model.B, model.W, s.H, s.L, F, M);
  };
  OracleMatch out;
  out.oracle = fd_quadratic_minimizer(J, dim);
  out.synthesized.resize(dim);
  for (std::size_t k = 0; k < N; ++k)
    out.synthesized.segment(static_cast<Eigen::Index>(k) * nF, nF) = vec_star(s.F[k], masks.F);
  for (std::size_t k = 1; k < N; ++k)
    out.synthesized.segment(Ni * nF + static_cast<Eigen::Index>(k - 1) * nM, nM) =
        vec_star(s.M[k], masks.M);
  out.relative_error = relative_gap(out.synthesized, out.oracle);
  return out;
}

// ---------------------------------------------------------------------------

CheckResult check_golden_ratio() {
  return timed({"AC1", "golden-ratio DARE", false, "", 0.0}, [](CheckResult& r) {
    const Matrix one = Matrix::Ones(1, 1);
    const auto t0 = std::chrono::steady_clock::now();
    const RiccatiSolution s = solve_dare(one, one, one, one);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double phi = 0.5 * (1.0 + std::sqrt(5.0));
    const double eX = std::abs(s.X(0, 0) - phi);
    const double eL = std::abs(s.L(0, 0) + (phi - 1.0));
    r.passed = eX <= 1e-6 && eL <= 1e-6 && s.closed_loop_radius < 1.0 && secs < 1.0;
    r.detail = "X=" + fmt(s.X(0, 0)) + " L=" + fmt(s.L(0, 0)) + " |dX|=" + fmt(eX) +
               " |dL|=" + fmt(eL) + " rho=" + fmt(s.closed_loop_radius);
  });
}

CheckResult check_kronecker_identities(std::uint64_t seed, int instances) {
  return timed({"AC2", "Kronecker/vec identities", false, "", 0.0},
               [&](CheckResult& r) {
    Rng rng = make_rng(seed, 2);
    std::uniform_int_distribution<int> dimd(1, 5);
    double worst[6] = {0, 0, 0, 0, 0, 0};
    for (int t = 0; t < instances; ++t) {
      const int p = dimd(rng), q = dimd(rng), s = dimd(rng), u = dimd(rng);
      // definition: block (i, j) = a_ij B, against an index loop
      {
        const Matrix A = random_matrix(rng, p, q), B = random_matrix(rng, s, u);
        const Matrix K = kron(A, B);
        double e = 0.0;
        for (int i = 0; i < p * s; ++i)
          for (int j = 0; j < q * u; ++j)
            e = std::max(e, std::abs(K(i, j) - A(i / s, j / u) * B(i % s, j % u)));
        worst[0] = std::max(worst[0], e);
      }
      // vec(AXB) = (B' kron A) vec(X)
      {
        const Matrix A = random_matrix(rng, p, q), X = random_matrix(rng, q, s),
                     B = random_matrix(rng, s, u);
        worst[1] = std::max(worst[1],
                            inf_norm(Vector(vec(A * X * B) - kron(B.transpose(), A) * vec(X))));
      }
      // mixed product
      {
        const Matrix A = random_matrix(rng, p, q), C = random_matrix(rng, q, s),
                     B = random_matrix(rng, u, p), D = random_matrix(rng, p, s);
        worst[2] = std::max(worst[2],
                            inf_norm(Matrix(kron(A, B) * kron(C, D) - kron(A * C, B * D))));
      }
      // transpose distributes
      {
        const Matrix A = random_matrix(rng, p, q), B = random_matrix(rng, s, u);
        worst[3] = std::max(worst[3], inf_norm(Matrix(kron(A, B).transpose() -
                                                      kron(A.transpose(), B.transpose()))));
      }
      // Tr{A X B X'} = vec(X)' (B' kron A) vec(X)
      {
        const Matrix A = random_matrix(rng, p, p), X = random_matrix(rng, p, q),
                     B = random_matrix(rng, q, q);
        const double lhs = (A * X * B * X.transpose()).trace();
        const double rhs = vec(X).dot(kron(B.transpose(), A) * vec(X));
        worst[4] = std::max(worst[4], std::abs(lhs - rhs));
      }
      // (A kron B)^-1 = A^-1 kron B^-1, shifted to stay well conditioned
      {
        const Matrix A = random_matrix(rng, p, p) + 3.0 * p * Matrix::Identity(p, p);
        const Matrix B = random_matrix(rng, s, s) + 3.0 * s * Matrix::Identity(s, s);
        worst[5] = std::max(worst[5], inf_norm(Matrix(kron(A, B).inverse() -
                                                      kron(A.inverse(), B.inverse()))));
      }
    }
    const char* names[6] = {"def", "vecAXB", "mixed", "transpose", "trace", "inverse"};
    double overall = 0.0;
    for (int i = 0; i < 6; ++i) {
      overall = std::max(overall, worst[i]);
      r.detail += std::string(i ? " " : "") + names[i] + "=" + fmt(worst[i]);
    }
    r.passed = overall <= 1e-10;
  });
}

CheckResult check_quadratic_definiteness(std::uint64_t seed, int instances) {
  return timed({"AC3", "quadratic form positive definite", false, "", 0.0},
               [&](CheckResult& r) {
    Rng rng = make_rng(seed, 3);
    const SubsystemPartition part({1, 2, 2}, {1, 1, 1});
    const IndexSet S = chain_masks(part).combined_index_set();
    const int n = part.n(), m = part.m();
    double min_y = std::numeric_limits<double>::infinity(), min_ss = min_y;
    for (int t = 0; t < instances; ++t) {
      const Matrix W = random_pd(rng, n), H = random_pd(rng, m), Hp = random_pd(rng, m);
      const Matrix L = random_matrix(rng, m, n), Lp = random_matrix(rng, m, n);
      const Matrix A = random_matrix(rng, n, n), B = random_matrix(rng, n, m);
      for (const QuadraticForm& q : {build_quadratic_steady(A, B, W, H, L),
                                     build_quadratic_step(Hp, Lp, H, L, A, B, W)}) {
        min_y = std::min(min_y, check_positive_definite(q.Y).min_eigenvalue);
        min_ss = std::min(min_ss, check_positive_definite(submatrix(q.Y, S)).min_eigenvalue);
      }
    }
    r.passed = min_y > 0.0 && min_ss > 0.0;
    r.detail = std::to_string(instances) + " draws, min eig Y=" + fmt(min_y) +
               " [Y]_SS=" + fmt(min_ss);
  });
}

CheckResult check_oracle_gains(const LinearPlatoonModel& model,
                               const CostSpec& cost,
                               const ValidationOptions& opts) {
  return timed({"AC4", "gains match oracle minimizer", false, "", 0.0},
               [&](CheckResult& r) {
    const OracleMatch ss = match_steady_gains(model, cost, opts.flip_L_sign);
    const OracleMatch fh = match_finite_gains(model, cost, opts.finite_horizon);
    r.passed = ss.relative_error <= 1e-6 && fh.relative_error <= 1e-6;
    r.detail = "steady |S|=" + std::to_string(ss.oracle.size()) + " rel=" +
               fmt(ss.relative_error) + "; N=" + std::to_string(opts.finite_horizon) +
               " vars=" + std::to_string(fh.oracle.size()) + " rel=" + fmt(fh.relative_error);
  });
}

CheckResult check_decoupled_reduction(const LinearPlatoonModel& model,
                                      const CostSpec& cost) {
  return timed({"AC5", "decoupled reduction", false, "", 0.0}, [&](CheckResult& r) {
    const LinearPlatoonModel dm = decouple(model);
    const CostSpec dc = decouple(cost, model.partition);
    const DelayedGains g = synthesize_steady(dm, dc);
    const double eF = inf_norm(Matrix(g.F - g.L));
    const double eM = inf_norm(Matrix(g.M - g.L * (dm.A + dm.B * g.L)));
    r.passed = eF <= 1e-9 && eM <= 1e-9 && std::abs(g.delay_penalty_rate) <= 1e-12;
    r.detail = "|F-L|=" + fmt(eF) + " |M-L(A+BL)|=" + fmt(eM) +
               " penalty=" + fmt(g.delay_penalty_rate);
  });
}

CheckResult check_estimator_identities(const LinearPlatoonModel& model,
                                       const DelayedGains& gains,
                                       std::uint64_t seed, long steps) {
  return timed({"AC6", "estimator identities", false, "", 0.0}, [&](CheckResult& r) {
    Rng rng = make_rng(seed, 6);
    const NoiseSampler noise(model.W);
    const Realization g = Realization::distributed(model, gains);
    MonolithicController ctrl(g);
    const Matrix AF = model.A + model.B * gains.F;
    Vector x = noise.draw(rng);
    std::vector<Vector> w;
    double e1 = 0.0, e2 = 0.0;
    for (long k = 0; k < steps; ++k) {
      const ControllerState& s = ctrl.state();
      if (k >= 1) e1 = std::max(e1, inf_norm(Vector(x - s.zeta - w[k - 1])));
      if (k >= 2)
        e2 = std::max(e2, inf_norm(Vector(x - s.xi - w[k - 1] - AF * w[k - 2])));
      const Vector u = ctrl.step(x);
      w.push_back(noise.draw(rng));
      x = model.A * x + model.B * u + w.back();
    }
    r.passed = e1 <= 1e-10 && e2 <= 1e-10;
    r.detail = std::to_string(steps) + " steps, |x-zeta-w|=" + fmt(e1) +
               " |x-xi-w-(A+BF)w|=" + fmt(e2);
  });
}

CheckResult check_distributed_equivalence(const LinearPlatoonModel& model,
                                          const DelayedGains& gains,
                                          std::uint64_t seed, long steps) {
  return timed({"AC7", "per-vehicle execution matches monolithic", false, "", 0.0},
               [&](CheckResult& r) {
    const Realization g = Realization::distributed(model, gains);
    const NoiseSampler noise(model.W);
    double worst = 0.0;
    {
      Rng rng = make_rng(seed, 7);
      MonolithicController mono(g);
      DistributedController dist(g, model.partition);
      Vector x = noise.draw(rng);
      for (long k = 0; k < steps; ++k) {
        const Vector u = mono.step(x);
        worst = std::max(worst, inf_norm(Vector(u - dist.step(x))));
        x = model.A * x + model.B * u + noise.draw(rng);
      }
    }
    // Every cross-vehicle delivery is required by someone.
    const std::size_t count = model.partition.subsystems();
    int caught = 0, cases = 0;
    for (std::size_t origin = 0; origin < count; ++origin)
      for (std::size_t to = 0; to < count; ++to) {
        if (origin == to) continue;
        ++cases;
        Rng rng = make_rng(seed, 70 + cases);
        DistributedController dist(g, model.partition);
        dist.bus().withhold(origin, 5, to);
        Vector x = noise.draw(rng);
        try {
          for (long k = 0; k < 10; ++k) {
            const Vector u = dist.step(x);
            x = model.A * x + model.B * u + noise.draw(rng);
          }
        } catch (const InformationViolation&) {
          ++caught;
        }
      }
    r.passed = worst <= 1e-12 && caught == cases;
    r.detail = std::to_string(steps) + " steps, max |du|=" + fmt(worst) + "; withheld " +
               std::to_string(caught) + "/" + std::to_string(cases) + " detected";
  });
}

CheckResult check_orthogonality(const LinearPlatoonModel& model,
                                const DelayedGains& gains, std::uint64_t seed,
                                long steps) {
  return timed({"AC10", "xi orthogonal to x - xi", false, "", 0.0},
               [&](CheckResult& r) {
    Rng rng = make_rng(seed, 10);
    const NoiseSampler noise(model.W);
    MonolithicController ctrl(Realization::distributed(model, gains));
    const int n = model.n();
    const std::size_t batch = 100;
    std::vector<std::vector<double>> series(static_cast<std::size_t>(n * n));
    Vector x = noise.draw(rng);
    for (long k = 0; k < steps + 2; ++k) {
      if (k >= 2) {
        const Vector& xi = ctrl.state().xi;
        const Vector e = x - xi;
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j) series[static_cast<std::size_t>(i * n + j)].push_back(xi(i) * e(j));
      }
      const Vector u = ctrl.step(x);
      x = model.A * x + model.B * u + noise.draw(rng);
    }
    double worst = 0.0;
    for (const auto& s : series) {
      const MeanEstimate est = batch_means(s, 0, batch);
      const double z = est.std_error > 0.0 ? std::abs(est.mean) / est.std_error
                                           : std::numeric_limits<double>::infinity();
      worst = std::max(worst, z);
    }
    r.passed = worst <= 4.0;
    r.detail = std::to_string(steps) + " steps, max |mean|/se=" + fmt(worst);
  });
}

bool ValidationReport::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return !checks.empty();
}

ValidationReport run_validation(const LinearPlatoonModel& model,
                                const CostSpec& cost,
                                const ValidationOptions& opts) {
  ValidationReport rep;
  rep.checks.push_back(check_golden_ratio());
  rep.checks.push_back(check_kronecker_identities(opts.seed, opts.instances));
  rep.checks.push_back(check_quadratic_definiteness(opts.seed, opts.instances));
  rep.checks.push_back(check_oracle_gains(model, cost, opts));
  rep.checks.push_back(check_decoupled_reduction(model, cost));
  DelayedGains gains;
  try {
    gains = synthesize_steady(model, cost);
  } catch (const Error& e) {
    rep.checks.push_back({"SYN", "synthesis", false, e.what(), 0.0});
    return rep;
  }
  rep.checks.push_back(check_estimator_identities(model, gains, opts.seed, opts.estimator_steps));
  rep.checks.push_back(check_distributed_equivalence(model, gains, opts.seed, opts.equivalence_steps));
  rep.checks.push_back(check_orthogonality(model, gains, opts.seed, opts.orthogonality_steps));
  return rep;
}

}  // namespace platoon
