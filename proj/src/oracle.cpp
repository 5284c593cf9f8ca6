#include "ampsi/oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/minima.hpp>

#include "ampsi/csv.hpp"

namespace ampsi {

namespace {

constexpr double kQuadTol = 1e-13;
constexpr unsigned kMaxDepth = 20;
constexpr double kMinEss = 100.0;

double log_normal_pdf(double x, double var) {
  return -0.5 * (x * x / var + std::log(2.0 * std::numbers::pi * var));
}

template <typename F>
double integrate_checked(F&& f, double lo, double hi, const char* what) {
  double err = 0.0, l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, kMaxDepth, kQuadTol, &err, &l1);
  if (!(err <= 1e-10 * std::max(l1, 1e-300)) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "oracle quadrature (" << what << ") did not converge: error " << err
       << " after refinement depth " << kMaxDepth << " (up to " << 61 * ((std::size_t{1} << kMaxDepth) * 2 - 1)
       << " nodes)";
    throw std::runtime_error(os.str());
  }
  return v;
}

// Posterior over the continuous component given the log of its unnormalized
// density g. Returns log of the integral and the conditional mean.
struct ContinuousPart {
  double log_mass;
  double mean;
};

template <typename G>
ContinuousPart integrate_log_density(G&& g, double prior_sd) {
  // Locate the mode numerically, then rescale by the numerical curvature so
  // the integrand is O(1) wide around the origin.
  const double span = 60.0 * prior_sd + 60.0;
  const auto [x_star, neg_g] = boost::math::tools::brent_find_minima(
      [&](double x) { return -g(x); }, -span, span, std::numeric_limits<double>::digits / 2);
  const double g_star = -neg_g;
  const double h = 1e-4 * std::max(1.0, std::abs(x_star));
  const double curv = -(g(x_star + h) - 2.0 * g_star + g(x_star - h)) / (h * h);
  if (!(curv > 0.0)) throw std::runtime_error("oracle quadrature: non-concave log density");
  const double w = 1.0 / std::sqrt(curv);
  const auto dens = [&](double s) { return std::exp(g(x_star + w * s) - g_star); };
  const double lim = 40.0;
  const double z = integrate_checked(dens, -lim, lim, "mass");
  const double m = integrate_checked([&](double s) { return s * dens(s); }, -lim, lim, "first moment");
  return {g_star + std::log(w * z), x_star + w * m / z};
}

struct SlabSpec {
  double atom_prob;  // probability of X = 0
  double slab_var;
};

SlabSpec slab_of(const PriorModel& prior) {
  if (const auto* bg = std::get_if<BgPrior>(&prior)) return {1.0 - bg->epsilon(), 1.0};
  if (const auto* gg = std::get_if<GgPrior>(&prior)) return {0.0, gg->sigma_x_sq()};
  throw std::invalid_argument("quadrature oracle handles BG and GG priors only");
}

double quadrature_mean(const PriorModel& prior, double lambda_sq, const double* sigma_hat_sq,
                       double a, double b) {
  const SlabSpec spec = slab_of(prior);
  if (!(lambda_sq > 0.0) || (sigma_hat_sq && !(*sigma_hat_sq > 0.0)))
    throw std::invalid_argument("quadrature oracle needs positive noise variances");
  const auto log_lik = [&](double x) {
    double v = log_normal_pdf(a - x, lambda_sq);
    if (sigma_hat_sq) v += log_normal_pdf(b - x, *sigma_hat_sq);
    return v;
  };
  if (spec.atom_prob >= 1.0) return 0.0;
  const ContinuousPart cont = integrate_log_density(
      [&](double x) { return log_normal_pdf(x, spec.slab_var) + log_lik(x); }, std::sqrt(spec.slab_var));
  if (spec.atom_prob <= 0.0) return cont.mean;
  const double log_atom = std::log(spec.atom_prob) + log_lik(0.0);
  const double log_slab = std::log1p(-spec.atom_prob) + cont.log_mass;
  const double p_slab = 1.0 / (1.0 + std::exp(log_atom - log_slab));
  return p_slab * cont.mean;
}

}  // namespace

double oracle_posterior_mean_quadrature(const PriorModel& prior, double lambda_sq,
                                        double sigma_hat_sq, double a, double b) {
  return quadrature_mean(prior, lambda_sq, &sigma_hat_sq, a, b);
}

double oracle_posterior_mean_quadrature_no_si(const PriorModel& prior, double lambda_sq, double a) {
  return quadrature_mean(prior, lambda_sq, nullptr, a, 0.0);
}

McEstimate oracle_posterior_mean_mc(const PriorModel& prior, double lambda_sq, double sigma_hat_sq,
                                    double a, double b, std::size_t samples, std::uint64_t seed) {
  if (!(lambda_sq > 0.0 && sigma_hat_sq > 0.0))
    throw std::invalid_argument("MC oracle needs positive noise variances");
  if (samples < 2) throw std::invalid_argument("MC oracle needs at least 2 samples");
  Rng rng = make_rng(seed);
  // Weights are taken relative to the largest possible likelihood, so each
  // lies in (0, 1].
  const auto rel_log_w = [&](double x, double x_ref) {
    return -0.5 * ((a - x) * (a - x) / lambda_sq + (b - x_ref) * (b - x_ref) / sigma_hat_sq);
  };
  long double s0 = 0, s1 = 0, sw2 = 0, sw2x = 0, sw2xx = 0;
  for (std::size_t i = 0; i < samples; ++i) {
    double x = 0.0, x_ref = 0.0;
    if (const auto* bg = std::get_if<BgPrior>(&prior)) {
      const double u = uniform01(rng);
      const double g = normal(rng);
      x = u < bg->epsilon() ? g : 0.0;
      x_ref = x;
    } else if (const auto* gg = std::get_if<GgPrior>(&prior)) {
      x = std::sqrt(gg->sigma_x_sq()) * normal(rng);
      x_ref = x;
    } else {
      const auto& bdd = std::get<BddPrior>(prior);
      const auto& e = bdd.eps();
      const double u = uniform01(rng);
      const double g1 = normal(rng), g2 = normal(rng);
      const double sd = std::sqrt(bdd.sigma_s_sq());
      if (u < e[0]) {
      } else if (u < e[0] + e[1]) {
        x_ref = sd * g1;
      } else if (u < e[0] + e[1] + e[2]) {
        x_ref = sd * g1;
        x = bdd.rho() * x_ref + std::sqrt(bdd.sigma_sq()) * g2;
      } else {
        x = sd * g2;
      }
    }
    const long double w = std::exp(rel_log_w(x, x_ref));
    s0 += w;
    s1 += w * x;
    sw2 += w * w;
    sw2x += w * w * x;
    sw2xx += w * w * x * x;
  }
  McEstimate est{};
  est.samples = samples;
  if (!(s0 > 0)) throw std::runtime_error("MC oracle: every importance weight underflowed");
  const long double mean = s1 / s0;
  est.mean = static_cast<double>(mean);
  est.ess = static_cast<double>(s0 * s0 / sw2);
  // Delta-method variance of the ratio estimator.
  const long double num = sw2xx - 2 * mean * sw2x + mean * mean * sw2;
  est.stderr = static_cast<double>(std::sqrt(std::max<long double>(num, 0) / (s0 * s0)));
  if (est.ess < kMinEss) {
    std::ostringstream os;
    os << "MC oracle: effective sample size " << est.ess << " below " << kMinEss;
    throw std::runtime_error(os.str());
  }
  return est;
}

double oracle_joint_density(double a, double b, double rho, double sigma_x_sq, double sigma_a_sq,
                            double sigma_b_sq) {
  if (!(sigma_x_sq > 0.0 && sigma_a_sq > 0.0 && sigma_b_sq > 0.0))
    throw std::invalid_argument("oracle_joint_density: variances must be positive");
  // Integrate over u = x / sqrt(sigma_x^2) so a narrow signal prior keeps a
  // well-scaled integrand.
  const double sx = std::sqrt(sigma_x_sq);
  const auto f = [&](double u) {
    const double x = sx * u;
    return std::exp(log_normal_pdf(u, 1.0) + log_normal_pdf(b - x, sigma_b_sq) +
                    log_normal_pdf(a - rho * x, sigma_a_sq));
  };
  double err = 0.0, l1 = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, -12.0, 12.0, kMaxDepth, 1e-14, &err, &l1);
  if (!(err <= 1e-12) || !std::isfinite(v)) {
    std::ostringstream os;
    os << "oracle_joint_density: quadrature error " << err << " after refinement depth " << kMaxDepth;
    throw std::runtime_error(os.str());
  }
  return v;
}

std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

std::string prior_key(const PriorModel& prior) {
  std::string k = model_name(prior);
  if (const auto* bg = std::get_if<BgPrior>(&prior)) {
    k += ";eps=" + format_double(bg->epsilon());
  } else if (const auto* gg = std::get_if<GgPrior>(&prior)) {
    k += ";sigma_x_sq=" + format_double(gg->sigma_x_sq());
  } else {
    const auto& bdd = std::get<BddPrior>(prior);
    for (int i = 0; i < 4; ++i) k += ";eps" + std::to_string(i + 1) + "=" + format_double(bdd.eps()[i]);
    k += ";sigma_s_sq=" + format_double(bdd.sigma_s_sq()) + ";rho=" + format_double(bdd.rho());
  }
  return k;
}

}  // namespace

std::string params_key(const PriorModel& prior, double lambda_sq, double sigma_hat_sq) {
  return prior_key(prior) + ";lambda_sq=" + format_double(lambda_sq) +
         ";sigma_hat_sq=" + format_double(sigma_hat_sq);
}

std::string params_key_no_si(const PriorModel& prior, double lambda_sq) {
  return prior_key(prior) + ";lambda_sq=" + format_double(lambda_sq) + ";no_si";
}

std::vector<GoldenCase> golden_cases() {
  const PriorModel bg{BgPrior(0.3)};
  const PriorModel bdd{BddPrior({0.80, 0.01, 0.18, 0.01}, 1.0, 0.95)};
  const PriorModel gg{GgPrior(1.0)};
  return {
      {"bg", bg, 0.25, 0.01, 1.0, 0.9, 0, 0},
      {"bg", bg, 0.25, 0.01, 0.0, 0.0, 0, 0},
      {"bg_no_si", bg, 1.0, 0.0, 2.0, 0.0, 0, 0},
      {"gg", gg, 1.0, 1.0, 1.0, 1.0, 0, 0},
      {"bdd", bdd, 0.5, 0.2, 1.2, 0.8, 10'000'000, 20240501},
      {"bdd", bdd, 0.5, 0.2, 0.0, 0.0, 1'000'000, 20240502},
  };
}

std::uint64_t golden_hash(const GoldenCase& c) {
  return fnv1a64(c.model == "bg_no_si" ? params_key_no_si(c.prior, c.lambda_sq)
                                       : params_key(c.prior, c.lambda_sq, c.sigma_hat_sq));
}

GoldenRow evaluate_golden(const GoldenCase& c) {
  GoldenRow row{c.model, golden_hash(c), c.a, c.b, 0.0, 0.0, "quadrature", 0};
  if (c.samples > 0) {
    const McEstimate e = oracle_posterior_mean_mc(c.prior, c.lambda_sq, c.sigma_hat_sq, c.a, c.b, c.samples, c.seed);
    row.oracle_value = e.mean;
    row.stderr = e.stderr;
    row.method = "monte-carlo";
    row.samples = c.samples;
  } else if (c.model == "bg_no_si") {
    row.oracle_value = oracle_posterior_mean_quadrature_no_si(c.prior, c.lambda_sq, c.a);
  } else {
    row.oracle_value = oracle_posterior_mean_quadrature(c.prior, c.lambda_sq, c.sigma_hat_sq, c.a, c.b);
  }
  return row;
}

std::vector<GoldenRow> read_golden(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::vector<GoldenRow> rows;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != 8) throw std::runtime_error("golden file: expected 8 fields in '" + line + "'");
    rows.push_back({f[0], std::stoull(f[1], nullptr, 16), std::stod(f[2]), std::stod(f[3]),
                    std::stod(f[4]), std::stod(f[5]), f[6], std::stoull(f[7])});
  }
  return rows;
}

std::string format_golden(const std::vector<GoldenRow>& rows) {
  CsvTable t({"model", "params_hash", "a", "b", "oracle_value", "stderr", "method", "samples"});
  for (const auto& r : rows) {
    std::ostringstream h;
    h << std::hex << r.params_hash;
    t.row().add(r.model).add(h.str()).add(r.a).add(r.b).add(r.oracle_value).add(r.stderr)
        .add(r.method).add(static_cast<long long>(r.samples));
  }
  return t.str();
}

}  // namespace ampsi
