#include "dgtau/tauanalysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "dgtau/error.hpp"

namespace dgtau {

std::string to_string(PathClass c) {
  switch (c) {
    case PathClass::ConformingLimit: return "conforming_limit";
    case PathClass::Divergent: return "divergent";
    case PathClass::Unclassified: return "unclassified";
  }
  return "?";
}

int SpectrumSweep::sample_index(double tau) const {
  for (std::size_t s = 0; s < taus.size(); ++s)
    if (taus[s] == tau) return static_cast<int>(s);
  return -1;
}

int SpectrumSweep::count(PathClass c) const {
  return static_cast<int>(std::count(classification.begin(), classification.end(), c));
}

std::vector<int> greedy_match(const Eigen::VectorXcd& predicted, const Eigen::VectorXcd& next) {
  const int n = static_cast<int>(predicted.size());
  if (next.size() != n) throw InvalidInput("greedy_match: spectra differ in size");
  const int k = std::min(n, 8);
  struct Pair {
    double d;
    int i, j;
  };
  std::vector<Pair> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * k);
  std::vector<int> cand(n);
  for (int i = 0; i < n; ++i) {
    std::iota(cand.begin(), cand.end(), 0);
    auto dist = [&](int j) { return std::abs(predicted(i) - next(j)); };
    std::partial_sort(cand.begin(), cand.begin() + k, cand.end(), [&](int a, int b) {
      const double da = dist(a), db = dist(b);
      return da < db || (da == db && a < b);
    });
    for (int c = 0; c < k; ++c) pairs.push_back({dist(cand[c]), i, cand[c]});
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<int> match(n, -1);
  std::vector<bool> taken(n, false);
  for (const auto& p : pairs) {
    if (match[p.i] >= 0 || taken[p.j]) continue;
    match[p.i] = p.j;
    taken[p.j] = true;
  }
  // Sources whose short candidate lists were exhausted.
  for (int i = 0; i < n; ++i) {
    if (match[i] >= 0) continue;
    int best = -1;
    for (int j = 0; j < n; ++j)
      if (!taken[j] && (best < 0 || std::abs(predicted(i) - next(j)) < std::abs(predicted(i) - next(best))))
        best = j;
    match[i] = best;
    taken[best] = true;
  }
  return match;
}

std::vector<int> ambiguous_matches(const Eigen::VectorXcd& predicted, const Eigen::VectorXcd& next, double ratio,
                                   double scale) {
  const int n = static_cast<int>(predicted.size());
  const double coincide = 1e-8 * scale;
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    int j1 = -1, j2 = -1;
    double d1 = std::numeric_limits<double>::infinity(), d2 = d1;
    for (int j = 0; j < n; ++j) {
      const double d = std::abs(predicted(i) - next(j));
      if (d < d1) {
        d2 = d1;
        j2 = j1;
        d1 = d;
        j1 = j;
      } else if (d < d2) {
        d2 = d;
        j2 = j;
      }
    }
    if (j2 < 0 || d1 <= ratio * d2 || d1 <= 1e-10 * scale) continue;
    if (std::abs(next(j1) - next(j2)) <= coincide) continue;
    // Coincident sources make either assignment equivalent.
    bool twin = false;
    for (int i2 = 0; i2 < n && !twin; ++i2) twin = i2 != i && std::abs(predicted(i) - predicted(i2)) <= coincide;
    if (!twin) out.push_back(i);
  }
  return out;
}

namespace {

void validate_taus(const std::vector<double>& taus) {
  if (taus.size() < 2) throw InvalidInput("sweep: at least two tau samples are required");
  for (std::size_t i = 0; i < taus.size(); ++i) {
    if (!(taus[i] >= 0.0) || !std::isfinite(taus[i])) throw InvalidInput("sweep: tau samples must be finite and >= 0");
    if (i > 0 && !(taus[i] > taus[i - 1])) throw InvalidInput("sweep: tau samples must be strictly increasing");
  }
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

double distance_to_set(Complex z, const Eigen::VectorXcd& set) {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < set.size(); ++j) d = std::min(d, std::abs(z - set(j)));
  return d;
}

}  // namespace

SpectrumSweep sweep(const DGOperator& op, const std::vector<double>& taus, const SweepOptions& options) {
  validate_taus(taus);
  if (!op.config().flux.tau_dependent())
    throw InvalidInput("sweep: flux '" + to_string(op.config().flux.kind) + "' does not depend on tau");

  const Eigen::MatrixXd k0 = op.congruence(op.central_part());
  const Eigen::MatrixXd k1 = op.congruence(op.penalty_part());
  SpectrumOptions spec_opts;
  spec_opts.eigenvectors = options.eigenvectors;
  auto solve = [&](double t) {
    Spectrum s = compute_transformed_spectrum(k0 + t * k1, t, spec_opts);
    if (s.has_eigenvectors()) s.eigenvectors = op.back_transform(s.eigenvectors);
    return s;
  };

  SpectrumSweep out;
  out.spectra.push_back(solve(taus[0]));
  out.taus.push_back(taus[0]);
  out.requested.push_back(true);
  const Spectrum rho_source = taus[0] == 0.0 ? out.spectra[0] : compute_transformed_spectrum(k0, 0.0, {false});
  out.rho0 = rho_source.size() ? rho_source.eigenvalues.cwiseAbs().maxCoeff() : 0.0;

  const int n = out.spectra[0].size();
  out.paths.assign(n, {});
  for (int i = 0; i < n; ++i) out.paths[i].push_back(i);
  int refinements = 0;

  // Linear extrapolation from the last two accepted samples.
  auto predict = [&](double t) {
    const int s = static_cast<int>(out.taus.size()) - 1;
    Eigen::VectorXcd predicted(n);
    for (int p = 0; p < n; ++p) {
      predicted(p) = out.value(p, s);
      if (s > 0)
        predicted(p) += (out.value(p, s) - out.value(p, s - 1)) * ((t - out.taus[s]) / (out.taus[s] - out.taus[s - 1]));
    }
    return predicted;
  };

  auto append = [&](double t, Spectrum spec, bool requested) {
    const auto match = greedy_match(predict(t), spec.eigenvalues);
    for (int p = 0; p < n; ++p) out.paths[p].push_back(match[p]);
    out.taus.push_back(t);
    out.requested.push_back(requested);
    out.spectra.push_back(std::move(spec));
  };

  auto ambiguous = [&](double t, const Spectrum& spec) {
    const Eigen::VectorXcd predicted = predict(t);
    const double scale = std::max(1.0, spec.size() ? spec.eigenvalues.cwiseAbs().maxCoeff() : 0.0);
    return ambiguous_matches(predicted, spec.eigenvalues, options.ambiguity_ratio, scale);
  };

  for (std::size_t r = 1; r < taus.size(); ++r) {
    if (!options.track) {
      append(taus[r], solve(taus[r]), true);
      continue;
    }
    // Stack of pending samples; the top is the nearest to the last accepted sample.
    std::vector<std::pair<double, Spectrum>> pending;
    pending.emplace_back(taus[r], solve(taus[r]));
    while (!pending.empty()) {
      const double t = pending.back().first;
      const double t_cur = out.taus.back();
      const auto amb = ambiguous(t, pending.back().second);
      if (!amb.empty() && 0.5 * (t - t_cur) >= options.min_step && refinements < options.max_refinements) {
        const double mid = 0.5 * (t + t_cur);
        ++refinements;
        pending.emplace_back(mid, solve(mid));
        continue;
      }
      for (int p : amb) out.unresolved.push_back({t_cur, t, p});
      const bool requested = pending.size() == 1;
      Spectrum spec = std::move(pending.back().second);
      pending.pop_back();
      append(t, std::move(spec), requested);
    }
  }

  out.classification.assign(n, PathClass::Unclassified);
  if (!options.classify) return out;

  const ConformingSplit split = build_conforming_split(op);
  const BlockDecomposition blocks = block_decompose(op, split);
  out.n_conforming = split.n_conforming();
  out.n_nonconforming = split.n_nonconforming();
  out.conforming_eigenvalues = conforming_spectrum(blocks);
  const GerschgorinBasis gb = gerschgorin_basis(blocks);
  out.s_eigenvalues = gb.s_eigenvalues;

  const int last = static_cast<int>(out.taus.size()) - 1;
  const GerschgorinStructure g = gerschgorin_structure(gb, out.taus[last]);
  out.gerschgorin_disjoint = g.disjoint;
  for (int p = 0; p < n; ++p) {
    const Complex z = out.value(p, last);
    if (g.disjoint) {
      // Disjoint unions hold exactly N^C and N^NC eigenvalues respectively.
      if (g.in_conforming_union(z))
        out.classification[p] = PathClass::ConformingLimit;
      else if (g.in_union(z))
        out.classification[p] = PathClass::Divergent;
    } else if (z.real() < -options.divergence_factor * out.rho0) {
      out.classification[p] = PathClass::Divergent;
    } else if (distance_to_set(z, out.conforming_eigenvalues) <= options.conforming_tolerance * out.rho0) {
      out.classification[p] = PathClass::ConformingLimit;
    }
  }
  return out;
}

LemmaReport verify_lemma_rates(const SpectrumSweep& sweep, const BlockDecomposition& blocks,
                               const LemmaOptions& options) {
  LemmaReport rep;
  rep.tau_hi = sweep.taus.back();
  std::vector<int> samples;
  for (std::size_t s = 0; s < sweep.taus.size(); ++s)
    if (sweep.requested[s] && sweep.taus[s] > 0.0 && sweep.taus[s] >= options.fit_from)
      samples.push_back(static_cast<int>(s));
  if (samples.size() < 3 || !(rep.tau_hi >= 10.0 * sweep.taus[samples.front()] * (1.0 - 1e-12)))
    throw InvalidInput("verify_lemma_rates: the fit needs >= 3 positive samples spanning at least a decade");
  rep.tau_lo = sweep.taus[samples.front()];

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> s_eig(0.5 * (blocks.s_block + blocks.s_block.transpose()),
                                                            Eigen::EigenvaluesOnly);
  const Eigen::VectorXd s_values = s_eig.eigenvalues();
  const Eigen::VectorXcd a_values = conforming_spectrum(blocks);

  std::vector<double> x;
  for (int s : samples) x.push_back(sweep.taus[s]);
  std::vector<double> log_x;
  for (double t : x) log_x.push_back(std::log(t));

  for (int p = 0; p < sweep.num_paths(); ++p) {
    if (sweep.classification[p] == PathClass::Divergent) {
      std::vector<double> y;
      for (int s : samples) y.push_back(sweep.value(p, s).real());
      rep.divergent.push_back({p, fit_slope(x, y), 0.0, 0.0});
    } else if (sweep.classification[p] == PathClass::ConformingLimit) {
      std::vector<double> y;
      bool roundoff = false;
      for (int s : samples) {
        const double d = distance_to_set(sweep.value(p, s), a_values);
        const double rho = sweep.spectra[s].eigenvalues.cwiseAbs().maxCoeff();
        if (d <= options.roundoff_factor * std::numeric_limits<double>::epsilon() * rho) roundoff = true;
        y.push_back(std::log(std::max(d, std::numeric_limits<double>::min())));
      }
      ConvergentRate c;
      c.path = p;
      c.final_distance = std::exp(y.back());
      c.roundoff_level = roundoff;
      c.slope = roundoff ? 0.0 : fit_slope(log_x, y);
      rep.convergent.push_back(c);
    }
  }

  std::sort(rep.divergent.begin(), rep.divergent.end(),
            [](const DivergentRate& a, const DivergentRate& b) { return a.slope < b.slope; });
  for (std::size_t i = 0; i < rep.divergent.size() && i < static_cast<std::size_t>(s_values.size()); ++i) {
    auto& d = rep.divergent[i];
    d.s_eigenvalue = s_values(static_cast<Eigen::Index>(i));
    d.relative_error = std::abs(d.slope - d.s_eigenvalue) / std::abs(d.s_eigenvalue);
    rep.max_divergent_error = std::max(rep.max_divergent_error, d.relative_error);
  }
  if (rep.divergent.size() != static_cast<std::size_t>(s_values.size()))
    rep.max_divergent_error = std::numeric_limits<double>::infinity();
  rep.n_divergent = static_cast<int>(rep.divergent.size());

  rep.min_convergent_slope = std::numeric_limits<double>::infinity();
  rep.max_convergent_slope = -std::numeric_limits<double>::infinity();
  for (const auto& c : rep.convergent) {
    rep.max_final_distance = std::max(rep.max_final_distance, c.final_distance);
    if (c.roundoff_level) {
      ++rep.n_roundoff;
      continue;
    }
    rep.min_convergent_slope = std::min(rep.min_convergent_slope, c.slope);
    rep.max_convergent_slope = std::max(rep.max_convergent_slope, c.slope);
  }
  rep.n_convergent = static_cast<int>(rep.convergent.size());
  return rep;
}

std::vector<ReturningMode> find_returning_modes(const SpectrumSweep& sweep, double tau_lo, double tau_hi,
                                                double factor) {
  if (!(tau_hi > tau_lo)) throw InvalidInput("find_returning_modes: empty window");
  int end = -1;
  for (std::size_t s = 0; s < sweep.taus.size(); ++s)
    if (sweep.taus[s] <= tau_hi) end = static_cast<int>(s);
  if (end < 0 || sweep.taus.front() > tau_lo) throw InvalidInput("find_returning_modes: sweep does not span the window");

  const double floor = 1e-8 * std::max(1.0, sweep.rho0);
  std::vector<ReturningMode> out;
  for (int p = 0; p < sweep.num_paths(); ++p) {
    if (sweep.classification[p] != PathClass::ConformingLimit) continue;
    ReturningMode m;
    m.path = p;
    m.end_value = sweep.value(p, end);
    double peak = 0.0;
    for (int s = 0; s < end; ++s) {
      if (sweep.taus[s] <= tau_lo) continue;
      const double re = std::abs(sweep.value(p, s).real());
      if (re > peak) {
        peak = re;
        m.peak_tau = sweep.taus[s];
        m.peak_value = sweep.value(p, s);
      }
    }
    if (peak <= floor) continue;
    const double end_re = std::abs(m.end_value.real());
    m.ratio = end_re > 0.0 ? peak / end_re : std::numeric_limits<double>::infinity();
    if (m.ratio >= factor) out.push_back(m);
  }
  return out;
}

int highest_frequency_returning_mode(const SpectrumSweep& sweep, const std::vector<ReturningMode>& modes) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(modes.size()); ++i) {
    if (best < 0) {
      best = i;
      continue;
    }
    const Complex a = modes[i].end_value, b = modes[best].end_value;
    const double tol = 1e-9 * std::max(1.0, sweep.rho0);
    if (std::abs(a.imag()) > std::abs(b.imag()) + tol ||
        (std::abs(std::abs(a.imag()) - std::abs(b.imag())) <= tol && a.imag() > b.imag()))
      best = i;
  }
  return best;
}

EigenpairPath continue_eigenpair(const Eigen::MatrixXd& k0, const Eigen::MatrixXd& k1, double tau_from,
                                 Complex lambda, const Eigen::VectorXcd& y, double tau_to,
                                 const ContinuationOptions& options) {
  if (!(tau_from > 0.0) || !(tau_to >= 0.0)) throw InvalidInput("continue_eigenpair: need tau_from > 0 and tau_to >= 0");
  if (k0.rows() != k0.cols() || k1.rows() != k0.rows() || y.size() != k0.rows())
    throw InvalidInput("continue_eigenpair: dimension mismatch");
  if (!(options.max_ratio > options.min_ratio) || !(options.min_ratio > 1.0))
    throw InvalidInput("continue_eigenpair: need 1 < min_ratio < max_ratio");
  const bool down = tau_to < tau_from;

  EigenpairPath path;
  path.taus.push_back(tau_from);
  path.values.push_back(lambda);
  path.vector = y.normalized();
  path.initial_vector = path.vector;
  double ratio = options.max_ratio;
  while (path.taus.back() != tau_to) {
    const double t_prev = path.taus.back();
    double t = down ? std::max(tau_to, t_prev / ratio) : std::min(tau_to, t_prev * ratio);
    // Geometric steps never reach zero; finish with one direct step from the floor.
    if (tau_to == 0.0 && t_prev <= options.zero_floor) t = 0.0;
    const std::size_t m = path.taus.size();
    Complex sigma = path.values.back();
    if (m > 1) sigma += (path.values[m - 1] - path.values[m - 2]) * ((t - t_prev) / (t_prev - path.taus[m - 2]));

    const Eigen::MatrixXcd k = (k0 + t * k1).cast<Complex>();
    const double k_norm = std::max(1.0, k.cwiseAbs().colwise().sum().maxCoeff());
    Eigen::VectorXcd x = path.vector;
    Complex lam = sigma;
    bool converged = false;
    int iterations = 0;
    // One factorization per attempt; the predictor shift makes inverse iteration converge fast.
    Eigen::MatrixXcd shifted = k;
    shifted.diagonal().array() -= sigma;
    const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(shifted);
    for (; iterations < options.max_iterations && !converged; ++iterations) {
      const Eigen::VectorXcd next = lu.solve(x);
      // An exact shift makes the solve blow up along the eigenvector; only the direction matters.
      if (!next.allFinite() || next.norm() == 0.0) break;
      x = next.normalized();
      lam = x.dot(k * x);
      converged = (k * x - lam * x).norm() <= options.residual_tolerance * k_norm;
    }
    if (converged && std::abs(path.vector.dot(x)) >= options.min_overlap) {
      path.taus.push_back(t);
      path.values.push_back(lam);
      path.vector = x;
      if (iterations <= 3) ratio = std::min(options.max_ratio, 1.0 + 2.0 * (ratio - 1.0));
      continue;
    }
    ++path.rejected_steps;
    ratio = 1.0 + 0.5 * (ratio - 1.0);
    if (ratio < options.min_ratio) {
      std::ostringstream msg;
      msg << "continue_eigenpair: lost the path near tau = " << t_prev << " (lambda = " << path.values.back() << ")";
      throw NumericalFailure(msg.str());
    }
  }
  return path;
}

std::vector<ContinuedReturningMode> find_returning_modes_continued(const DGOperator& op, double tau_lo,
                                                                   double tau_hi, double factor, int max_candidates,
                                                                   const ContinuationOptions& options) {
  if (!(tau_lo > 0.0) || !(tau_hi > tau_lo)) throw InvalidInput("find_returning_modes_continued: need 0 < tau_lo < tau_hi");
  if (!op.config().flux.tau_dependent())
    throw InvalidInput("find_returning_modes_continued: flux does not depend on tau");
  const ConformingSplit split = build_conforming_split(op);
  const BlockDecomposition blocks = block_decompose(op, split);
  const GerschgorinStructure g = gerschgorin_structure(blocks, tau_hi);
  if (!g.disjoint)
    throw InvalidInput("find_returning_modes_continued: Gerschgorin unions overlap at tau_hi; raise tau_hi");

  const Eigen::MatrixXd k0 = op.congruence(op.central_part());
  const Eigen::MatrixXd k1 = op.congruence(op.penalty_part());
  const Spectrum end = compute_transformed_spectrum(k0 + tau_hi * k1, tau_hi);
  const double scale = std::max(1.0, end.eigenvalues.cwiseAbs().maxCoeff());
  const double floor = 1e-8 * scale;

  // Oscillatory candidates only: real eigenvalues meet partners on the real axis,
  // where the path is not unique. The spectrum is conjugate-symmetric, so one
  // representative per conjugate pair and per repeated eigenvalue is enough.
  std::vector<int> all;
  for (int i = 0; i < end.size(); ++i) {
    const Complex z = end.eigenvalues(i);
    if (z.imag() >= std::abs(z.real()) && g.in_conforming_union(z) && std::abs(z.real()) > floor) all.push_back(i);
  }
  std::stable_sort(all.begin(), all.end(), [&](int a, int b) {
    return std::abs(end.eigenvalues(a).real()) > std::abs(end.eigenvalues(b).real());
  });
  std::vector<int> candidates;
  for (int i : all) {
    if (static_cast<int>(candidates.size()) >= max_candidates) break;
    bool repeated = false;
    for (int c : candidates) repeated = repeated || std::abs(end.eigenvalues(i) - end.eigenvalues(c)) <= 1e-6 * scale;
    if (!repeated) candidates.push_back(i);
  }

  std::vector<ContinuedReturningMode> out;
  for (int i : candidates) {
    ContinuedReturningMode r;
    r.mode.path = i;
    r.mode.end_value = end.eigenvalues(i);
    try {
      r.path = continue_eigenpair(k0, k1, tau_hi, end.eigenvalues(i), end.eigenvectors.col(i), tau_lo, options);
    } catch (const NumericalFailure& e) {
      // Typically a collision on the real axis, where the path is not unique.
      r.failure = e.what();
      out.push_back(std::move(r));
      continue;
    }
    double peak = 0.0;
    for (std::size_t s = 1; s < r.path.taus.size(); ++s) {
      const double re = std::abs(r.path.values[s].real());
      if (re > peak) {
        peak = re;
        r.mode.peak_tau = r.path.taus[s];
        r.mode.peak_value = r.path.values[s];
      }
    }
    r.mode.ratio = peak / std::abs(r.mode.end_value.real());
    r.returning = r.mode.ratio >= factor;
    out.push_back(std::move(r));
  }
  return out;
}

ModalExpansion expand_in_tau1_basis(const Eigen::VectorXcd& vector, const Spectrum& basis, double max_condition) {
  if (!basis.has_eigenvectors()) throw InvalidInput("expand_in_tau1_basis: basis spectrum has no eigenvectors");
  if (vector.size() != basis.eigenvectors.rows()) throw InvalidInput("expand_in_tau1_basis: dimension mismatch");
  const Eigen::PartialPivLU<Eigen::MatrixXcd> lu(basis.eigenvectors);
  ModalExpansion e;
  const double rcond = lu.rcond();
  e.condition = rcond > 0.0 ? 1.0 / rcond : std::numeric_limits<double>::infinity();
  if (e.condition > max_condition) {
    std::ostringstream msg;
    msg << "expand_in_tau1_basis: eigenvector matrix is nearly defective (condition " << e.condition << ")";
    throw NumericalFailure(msg.str());
  }
  e.coefficients = lu.solve(vector);
  e.damping = basis.eigenvalues.real();
  const double norm = vector.norm();
  e.residual = (basis.eigenvectors * e.coefficients - vector).norm() / (norm > 0.0 ? norm : 1.0);
  if (e.residual > 1e-8) {
    std::ostringstream msg;
    msg << "expand_in_tau1_basis: reconstruction residual " << e.residual << " exceeds 1e-8";
    throw NumericalFailure(msg.str());
  }
  return e;
}

std::vector<double> log_grid(double lo, double hi, int per_decade, bool include_zero) {
  if (!(lo > 0.0) || !(hi > lo) || per_decade < 1) throw InvalidInput("log_grid: need 0 < lo < hi and per_decade >= 1");
  const double l0 = std::log10(lo), l1 = std::log10(hi);
  const int n = std::max(1, static_cast<int>(std::lround((l1 - l0) * per_decade)));
  std::vector<double> out;
  if (include_zero) out.push_back(0.0);
  for (int i = 0; i <= n; ++i) {
    const double e = l0 + (l1 - l0) * i / n;
    out.push_back(i == 0 ? lo : i == n ? hi : std::pow(10.0, e));
  }
  return out;
}

}  // namespace dgtau
