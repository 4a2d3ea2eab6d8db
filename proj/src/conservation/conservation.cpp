#include "liouville/conservation.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "liouville/parallel.hpp"

namespace liouville {

namespace {

using cd = std::complex<double>;

Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

std::size_t ipow(std::size_t b, std::size_t e) {
  std::size_t r = 1;
  while (e--) r *= b;
  return r;
}

// new[.. i ..] = sum_k M(i, k) old[.. k ..] along one index slot.
void mode_product(std::vector<double>& v, std::size_t m, std::size_t order, std::size_t slot,
                  const Eigen::MatrixXd& mat) {
  const std::size_t stride = ipow(m, order - 1 - slot), block = stride * m;
  std::vector<double> out(v.size(), 0.0);
  for (std::size_t base = 0; base < v.size(); base += block)
    for (std::size_t s = 0; s < stride; ++s)
      for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        for (std::size_t k = 0; k < m; ++k) acc += mat(ix(i), ix(k)) * v[base + k * stride + s];
        out[base + i * stride + s] = acc;
      }
  v = std::move(out);
}

// Components in a frame E (columns = new basis vectors, in old coordinates).
std::vector<double> to_frame(std::vector<double> v, std::size_t m, std::size_t up, std::size_t down,
                             const Eigen::MatrixXd& e, const Eigen::MatrixXd& einv) {
  const Eigen::MatrixXd et = e.transpose();
  for (std::size_t s = 0; s < up; ++s) mode_product(v, m, up + down, s, einv);
  for (std::size_t s = up; s < up + down; ++s) mode_product(v, m, up + down, s, et);
  return v;
}

std::vector<double> from_frame(std::vector<double> v, std::size_t m, std::size_t up, std::size_t down,
                               const Eigen::MatrixXd& e, const Eigen::MatrixXd& einv) {
  const Eigen::MatrixXd eit = einv.transpose();
  for (std::size_t s = 0; s < up; ++s) mode_product(v, m, up + down, s, e);
  for (std::size_t s = up; s < up + down; ++s) mode_product(v, m, up + down, s, eit);
  return v;
}

double pairwise_sum(const double* v, std::size_t n, std::size_t stride) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i * stride];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h, stride) + pairwise_sum(v + h * stride, n - h, stride);
}

// In-place DFT of a p-dimensional N^p array (last axis fastest), normalised by N^p.
void dft(std::vector<cd>& a, std::size_t n, std::size_t p) {
  std::vector<cd> tw(n);
  for (std::size_t k = 0; k < n; ++k)
    tw[k] = std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n));
  std::vector<cd> line(n);
  for (std::size_t axis = 0; axis < p; ++axis) {
    const std::size_t stride = ipow(n, p - 1 - axis), block = stride * n;
    for (std::size_t base = 0; base < a.size(); base += block)
      for (std::size_t s = 0; s < stride; ++s) {
        for (std::size_t k = 0; k < n; ++k) {
          cd acc = 0.0;
          for (std::size_t j = 0; j < n; ++j) acc += a[base + j * stride + s] * tw[(j * k) % n];
          line[k] = acc / static_cast<double>(n);
        }
        for (std::size_t k = 0; k < n; ++k) a[base + k * stride + s] = line[k];
      }
  }
}

void idft(std::vector<cd>& a, std::size_t n, std::size_t p) {
  for (auto& v : a) v = std::conj(v);
  dft(a, n, p);
  const double scale = static_cast<double>(ipow(n, p));
  for (auto& v : a) v = std::conj(v) * scale;
}

// Signed frequency of index k on an n-point grid.
long freq(std::size_t k, std::size_t n) {
  return k <= n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
}

std::vector<std::size_t> multi_index(std::size_t flat, std::size_t n, std::size_t p) {
  std::vector<std::size_t> idx(p);
  for (std::size_t a = p; a-- > 0;) {
    idx[a] = flat % n;
    flat /= n;
  }
  return idx;
}

// Largest |coefficient| over nonzero frequencies of a sampled function.
double fourier_max(const std::vector<double>& samples, std::size_t n, std::size_t p, long min_freq = 1) {
  std::vector<cd> a(samples.begin(), samples.end());
  dft(a, n, p);
  double worst = 0.0;
  for (std::size_t f = 0; f < a.size(); ++f) {
    auto idx = multi_index(f, n, p);
    long top = 0;
    for (auto k : idx) top = std::max(top, std::labs(freq(k, n)));
    if (top >= min_freq) worst = std::max(worst, std::abs(a[f]));
  }
  return worst;
}

// d/d theta_axis of a sampled periodic function (Nyquist mode dropped).
std::vector<double> spectral_derivative(const std::vector<double>& samples, std::size_t n, std::size_t p,
                                        std::size_t axis) {
  std::vector<cd> a(samples.begin(), samples.end());
  dft(a, n, p);
  for (std::size_t f = 0; f < a.size(); ++f) {
    auto idx = multi_index(f, n, p);
    const long k = freq(idx[axis], n);
    if (n % 2 == 0 && idx[axis] == n / 2)
      a[f] = 0.0;
    else
      a[f] *= cd(0.0, 2.0 * std::numbers::pi * static_cast<double>(k));
  }
  idft(a, n, p);
  std::vector<double> out(a.size());
  for (std::size_t f = 0; f < a.size(); ++f) out[f] = a[f].real();
  return out;
}

// Least-squares scalar c with l ~ c g; returns the residual max |l - c g|.
double fit_scalar(const std::vector<double>& l, const std::vector<double>& g, double& c) {
  double gg = 0.0, lg = 0.0, gmax = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    gg += g[i] * g[i];
    lg += l[i] * g[i];
    gmax = std::max(gmax, std::fabs(g[i]));
  }
  c = gmax > 1e-8 ? lg / gg : 0.0;
  double r = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) r = std::max(r, std::fabs(l[i] - c * g[i]));
  return r;
}

std::vector<std::vector<double>> eval_on(const Compiled& c, const std::vector<std::vector<double>>& pts) {
  std::vector<std::vector<double>> out;
  out.reserve(pts.size());
  for (const auto& x : pts) out.push_back(c.eval(x));
  return out;
}

}  // namespace

TorusAverage torus_average(const std::vector<std::vector<double>>& ambient, std::size_t up, std::size_t down,
                           const LiouvilleFrames& frames, std::size_t threads) {
  const std::size_t npts = frames.grid.x.size(), m = frames.grid.m, p = frames.grid.p;
  if (ambient.size() != npts) throw Error(ErrorKind::InvalidArgument, "one sample per grid point expected");
  if (frames.grid.n < 8) throw Error(ErrorKind::InvalidArgument, "averaging grid needs at least 8 points per angle");
  const std::size_t size = ipow(m, up + down);
  TorusAverage avg;
  avg.up = up;
  avg.down = down;
  avg.m = m;
  avg.n = frames.grid.n;
  avg.frame.resize(npts);
  parallel_for(npts, threads, [&](std::size_t f) {
    if (ambient[f].size() != size) throw Error(ErrorKind::InvalidArgument, "tensor sample has the wrong size");
    const Eigen::MatrixXd& e = frames.e[f];
    avg.frame[f] = to_frame(ambient[f], m, up, down, e, e.inverse());
  });
  // component-major copy for pairwise sums and transforms
  std::vector<std::vector<double>> comp(size, std::vector<double>(npts));
  for (std::size_t f = 0; f < npts; ++f)
    for (std::size_t c = 0; c < size; ++c) comp[c][f] = avg.frame[f][c];
  avg.mean.resize(size);
  for (std::size_t c = 0; c < size; ++c) avg.mean[c] = pairwise_sum(comp[c].data(), npts, 1) / static_cast<double>(npts);
  avg.deviation_field.assign(npts, 0.0);
  for (std::size_t f = 0; f < npts; ++f)
    for (std::size_t c = 0; c < size; ++c)
      avg.deviation_field[f] = std::max(avg.deviation_field[f], std::fabs(avg.frame[f][c] - avg.mean[c]));
  for (double d : avg.deviation_field) avg.deviation = std::max(avg.deviation, d);
  std::vector<double> fmax(size, 0.0);
  parallel_for(size, threads, [&](std::size_t c) { fmax[c] = fourier_max(comp[c], avg.n, p); });
  for (double v : fmax) avg.fourier = std::max(avg.fourier, v);
  return avg;
}

TorusAverage torus_average(const TensorField& g, const LiouvilleFrames& frames, std::size_t threads) {
  if (g.dim() != frames.grid.m) throw Error(ErrorKind::InvalidArgument, "tensor dimension mismatch");
  Compiled c = g.compile();
  std::vector<std::vector<double>> amb(frames.grid.x.size());
  parallel_for(amb.size(), threads, [&](std::size_t f) { amb[f] = c.eval(frames.grid.x[f]); });
  return torus_average(amb, g.up(), g.down(), frames, threads);
}

TorusAverage torus_average(const TensorField& g, const TorusChart& chart, std::size_t n, std::size_t threads) {
  return torus_average(g, liouville_frames(chart, n, threads), threads);
}

std::vector<std::vector<double>> to_ambient(const TorusAverage& avg, const LiouvilleFrames& frames) {
  std::vector<std::vector<double>> out(frames.e.size());
  for (std::size_t f = 0; f < out.size(); ++f) {
    const Eigen::MatrixXd& e = frames.e[f];
    out[f] = from_frame(avg.mean, avg.m, avg.up, avg.down, e, e.inverse());
  }
  return out;
}

std::vector<double> change_basis(const TorusAverage& avg, std::size_t p, const Eigen::MatrixXi& u) {
  // E' = E T with T = diag(U^T, I)
  Eigen::MatrixXd t = Eigen::MatrixXd::Identity(ix(avg.m), ix(avg.m));
  t.topLeftCorner(ix(p), ix(p)) = u.cast<double>().transpose();
  return to_frame(avg.mean, avg.m, avg.up, avg.down, t, t.inverse());
}

ConservationReport conservation_check(const TensorField& g, const SystemSpec& spec, const TorusChart& chart,
                                      const ConservationOptions& opt) {
  validate(spec);
  LiouvilleFrames frames = liouville_frames(chart, opt.grid, opt.threads);
  ConservationReport rep;
  rep.tol = spec.tol.avg;
  const std::size_t nf = opt.first_field_only ? 1 : spec.p();
  if (opt.first_field_only) {
    auto probe = irrationality_probe(chart, spec.fields[0]);
    if (probe.resonant)
      throw Error(ErrorKind::HypothesisViolated, "X_1 is numerically resonant; invariance under X_1 alone is not enough");
  }
  for (std::size_t i = 0; i < nf; ++i) {
    Compiled l = lie_derivative(spec.fields[i], g).compile();
    double worst = 0.0;
    for (const auto& v : eval_on(l, frames.grid.x))
      for (double c : v) worst = std::max(worst, std::fabs(c));
    rep.lie.push_back(worst);
    if (!(worst <= spec.tol.hypothesis))
      throw Error(ErrorKind::HypothesisViolated,
                  "L_X" + std::to_string(i + 1) + " G reaches " + fmt17(worst) + " on the torus");
  }
  rep.average = torus_average(g, frames, opt.threads);
  rep.pass = rep.average.deviation <= rep.tol;
  return rep;
}

ConformalReport conformal_check(const TensorField& g, const SystemSpec& spec, const TorusChart& chart,
                                const ConservationOptions& opt) {
  validate(spec);
  LiouvilleFrames frames = liouville_frames(chart, opt.grid, opt.threads);
  const std::size_t npts = frames.grid.x.size(), n = frames.grid.n, p = frames.grid.p;
  ConformalReport rep;
  auto gv = eval_on(g.compile(), frames.grid.x);
  for (std::size_t i = 0; i < spec.p(); ++i) {
    auto lv = eval_on(lie_derivative(spec.fields[i], g).compile(), frames.grid.x);
    std::vector<double> f(npts);
    double fmax = 0.0;
    for (std::size_t k = 0; k < npts; ++k) {
      const double r = fit_scalar(lv[k], gv[k], f[k]);
      rep.residual_fields = std::max(rep.residual_fields, r);
      fmax = std::max(fmax, std::fabs(f[k]));
    }
    rep.f_max.push_back(fmax);
    if (!(rep.residual_fields <= spec.tol.conformal))
      throw Error(ErrorKind::NotConformal, "no scalar fits L_X" + std::to_string(i + 1) + " G (residual " +
                                               fmt17(rep.residual_fields) + ")");
    const double tail = fourier_max(f, n, p, static_cast<long>(n / 4));
    if (!(tail <= spec.tol.conformal * std::max(1.0, fmax)))
      throw Error(ErrorKind::NotConformal, "conformal factor of X" + std::to_string(i + 1) +
                                               " is not smooth on the torus (spectral tail " + fmt17(tail) + ")");
  }

  // generators: L_{Z_j} G is d/d theta_j of the frame components
  TorusAverage avg = torus_average(g, frames, opt.threads);
  const std::size_t size = avg.mean.size();
  std::vector<std::vector<double>> comp(size, std::vector<double>(npts));
  for (std::size_t f = 0; f < npts; ++f)
    for (std::size_t c = 0; c < size; ++c) comp[c][f] = avg.frame[f][c];
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<std::vector<double>> d(size);
    parallel_for(size, opt.threads, [&](std::size_t c) { d[c] = spectral_derivative(comp[c], n, p, j); });
    double gmax = 0.0;
    for (std::size_t f = 0; f < npts; ++f) {
      std::vector<double> l(size);
      for (std::size_t c = 0; c < size; ++c) l[c] = d[c][f];
      double gj = 0.0;
      rep.residual_generators = std::max(rep.residual_generators, fit_scalar(l, avg.frame[f], gj));
      gmax = std::max(gmax, std::fabs(gj));
    }
    rep.g_max.push_back(gmax);
  }
  rep.pass = rep.residual_generators <= spec.tol.conformal_gen;
  return rep;
}

IrrationalityReport irrationality_probe(std::span<const double> rotation, long max_den) {
  IrrationalityReport rep;
  rep.rotation.assign(rotation.begin(), rotation.end());
  std::size_t ref = rotation.size();
  for (std::size_t j = 0; j < rotation.size(); ++j)
    if (rotation[j] != 0.0) {
      ref = j;
      break;
    }
  if (ref == rotation.size()) {
    rep.resonant = true;
    return rep;
  }
  rep.reference = ref;
  for (std::size_t j = 0; j < rotation.size(); ++j) {
    if (j == ref) continue;
    const double r = rotation[j] / rotation[ref];
    double x = r;
    long h1 = 1, h2 = 0, k1 = 0, k2 = 1;
    for (int it = 0; it < 64; ++it) {
      const double a = std::floor(x);
      if (std::fabs(a) > 1e15) break;
      const long ai = static_cast<long>(a);
      const long h = ai * h1 + h2, k = ai * k1 + k2;
      if (k > max_den) break;
      RationalApprox ra{j, h, k, std::fabs(r - static_cast<double>(h) / static_cast<double>(k))};
      rep.convergents.push_back(ra);
      if (ra.error < 1e-9 / (static_cast<double>(k) * static_cast<double>(k))) {
        rep.resonances.push_back(ra);
        break;
      }
      const double frac = x - a;
      if (frac < 1e-15) break;
      x = 1.0 / frac;
      h2 = h1;
      h1 = h;
      k2 = k1;
      k1 = k;
    }
  }
  rep.resonant = !rep.resonances.empty();
  return rep;
}

IrrationalityReport irrationality_probe(const TorusChart& chart, const VectorFieldExpr& x1, long max_den) {
  auto qp = verify_quasiperiodicity(chart, x1, 8);
  std::vector<double> rot(qp.rotation.data(), qp.rotation.data() + qp.rotation.size());
  return irrationality_probe(rot, max_den);
}

std::string deviation_csv(const TorusAverage& avg, const TorusGrid& grid) {
  std::string out;
  for (std::size_t k = 0; k < grid.p; ++k) out += "theta_" + std::to_string(k + 1) + ",";
  out += "deviation\n";
  for (std::size_t f = 0; f < grid.theta.size(); ++f) {
    for (std::size_t k = 0; k < grid.p; ++k) out += fmt17(grid.theta[f][k]) + ",";
    out += fmt17(avg.deviation_field[f]) + "\n";
  }
  return out;
}

}  // namespace liouville
