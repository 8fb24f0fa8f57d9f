#include "kdtl/scan_fit.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "kdtl/detail/parallel.hpp"
#include "kdtl/detail/text.hpp"
#include "kdtl/rng.hpp"

namespace kdtl {
namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

void FringeScan::validate() const {
  if (positions_nm.size() != counts.size()) {
    throw std::domain_error("scan positions and counts differ in length");
  }
  if (!(period_nm > 0.0)) throw std::domain_error("scan period must be positive");
  if (!(background >= 0.0)) throw std::domain_error("scan background must be >= 0");
  for (std::size_t i = 1; i < positions_nm.size(); ++i) {
    if (!(positions_nm[i] > positions_nm[i - 1])) {
      throw std::domain_error("scan positions must be strictly increasing");
    }
  }
  for (auto c : counts) {
    if (c < 0) throw std::domain_error("scan counts must be non-negative");
  }
}

std::vector<double> scan_positions(int points, double periods, double period_nm) {
  if (points < 1 || !(periods > 0.0) || !(period_nm > 0.0)) {
    throw std::domain_error("scan needs points >= 1, periods > 0 and a positive period");
  }
  std::vector<double> z(static_cast<std::size_t>(points));
  const double step = periods * period_nm / points;
  for (int i = 0; i < points; ++i) z[i] = i * step;
  return z;
}

FringeScan synthesize_scan(double true_visibility, double period_nm, double phase,
                           double mean_counts, double background,
                           std::span<const double> positions_nm, std::uint64_t seed) {
  if (!(true_visibility >= 0.0 && true_visibility <= 1.0)) {
    throw std::domain_error("visibility must lie in [0, 1]");
  }
  if (!(mean_counts > 0.0)) throw std::domain_error("mean counts must be positive");
  if (!(background >= 0.0)) throw std::domain_error("background must be >= 0");

  FringeScan scan;
  scan.positions_nm.assign(positions_nm.begin(), positions_nm.end());
  scan.background = background;
  scan.period_nm = period_nm;
  scan.counts.reserve(positions_nm.size());
  Rng rng = substream(seed, 0);
  for (double z : positions_nm) {
    const double mu =
        background + mean_counts * (1.0 + true_visibility * std::sin(kTwoPi * z / period_nm + phase));
    if (mu <= 0.0) {
      scan.counts.push_back(0);
      continue;
    }
    std::poisson_distribution<std::int64_t> poisson(mu);
    scan.counts.push_back(poisson(rng));
  }
  scan.validate();
  return scan;
}

VisibilityResult fit_scan(const FringeScan& scan) {
  scan.validate();
  const auto n = static_cast<Eigen::Index>(scan.counts.size());
  if (n < 4) throw FitError("fit needs at least 4 points, got " + std::to_string(n));
  if (scan.positions_nm.back() - scan.positions_nm.front() < 0.5 * scan.period_nm) {
    throw FitError("scan spans less than half a period");
  }

  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd y(n);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double theta = kTwoPi * scan.positions_nm[i] / scan.period_nm;
    design(i, 0) = 1.0;
    design(i, 1) = std::sin(theta);
    design(i, 2) = std::cos(theta);
    y(i) = static_cast<double>(scan.counts[i]);
    w(i) = 1.0 / std::max<double>(static_cast<double>(scan.counts[i]), 1.0);
  }

  // Weights 1/max(count, 1) start the fit; a second pass weights by the
  // fitted rate instead, which removes the low-count pull of 1/count weights.
  Eigen::Matrix3d cov;
  Eigen::Vector3d beta;
  for (int pass = 0; pass < 2; ++pass) {
    if (pass == 1) {
      const Eigen::VectorXd rate = design * beta;
      for (Eigen::Index i = 0; i < n; ++i) w(i) = 1.0 / std::max(rate(i), 1.0);
    }
    const Eigen::Matrix3d normal = design.transpose() * w.asDiagonal() * design;
    const Eigen::Vector3d rhs = design.transpose() * w.asDiagonal() * y;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eigen(normal, Eigen::EigenvaluesOnly);
    const Eigen::Vector3d ev = eigen.eigenvalues();  // ascending
    if (!(ev(0) > 1e-10 * ev(2))) {
      throw FitError("degenerate design matrix: scan positions do not resolve the fringe phase");
    }
    cov = normal.inverse();
    beta = cov * rhs;
  }

  const double level = beta(0);
  const double a = beta(1);
  const double b = beta(2);
  const double offset = level - scan.background;
  if (!(offset > 0.0)) throw FitError("fitted signal does not rise above the background");

  VisibilityResult r;
  r.mean_level = level;
  r.amplitude = std::hypot(a, b);
  // noise can push amplitude past the offset; contrast is bounded by 1
  r.visibility = std::min(r.amplitude / offset, 1.0);
  r.phase = std::atan2(b, a);
  if (r.phase < 0.0) r.phase += kTwoPi;
  if (r.phase >= kTwoPi) r.phase -= kTwoPi;

  Eigen::Vector3d grad;
  if (r.amplitude > 0.0) {
    grad << -r.amplitude / (offset * offset), a / (r.amplitude * offset),
        b / (r.amplitude * offset);
    r.uncertainty = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  } else {
    r.uncertainty = std::sqrt(0.5 * (cov(1, 1) + cov(2, 2))) / offset;
  }
  return r;
}

FitEnsembleSummary fit_ensemble(double true_visibility, double period_nm, double phase,
                                double mean_counts, double background,
                                std::span<const double> positions_nm, int seeds,
                                std::uint64_t base_seed) {
  if (seeds < 2) throw std::domain_error("fit ensemble needs at least two seeds");
  std::vector<VisibilityResult> results(static_cast<std::size_t>(seeds));
  detail::parallel_for(results.size(), [&](std::size_t i) {
    const auto scan = synthesize_scan(true_visibility, period_nm, phase, mean_counts, background,
                                      positions_nm, base_seed + i);
    results[i] = fit_scan(scan);
  });

  FitEnsembleSummary s;
  s.seeds = seeds;
  for (const auto& r : results) {
    s.mean_visibility += r.visibility;
    s.mean_reported_sigma += r.uncertainty;
  }
  s.mean_visibility /= seeds;
  s.mean_reported_sigma /= seeds;
  double var = 0.0;
  for (const auto& r : results) var += (r.visibility - s.mean_visibility) * (r.visibility - s.mean_visibility);
  s.empirical_sigma = std::sqrt(var / (seeds - 1));
  return s;
}

void write_scan(std::ostream& out, const FringeScan& scan) {
  out << "# period_nm = " << detail::format_double(scan.period_nm) << '\n';
  out << "# background = " << detail::format_double(scan.background) << '\n';
  out << "z [nm],counts [1]\n";
  for (std::size_t i = 0; i < scan.counts.size(); ++i) {
    out << detail::format_double(scan.positions_nm[i]) << ',' << scan.counts[i] << '\n';
  }
}

FringeScan read_scan(std::istream& in) {
  FringeScan scan;
  bool have_period = false;
  bool header = false;
  int lineno = 0;
  for (std::string raw; std::getline(in, raw);) {
    ++lineno;
    const auto line = detail::trim(raw);
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) {
      throw std::domain_error("scan line " + std::to_string(lineno) + ": " + what);
    };
    if (line.front() == '#') {
      const auto body = detail::trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) continue;
      const auto key = detail::trim(body.substr(0, eq));
      const auto value = detail::parse_double(body.substr(eq + 1));
      if (key == "period_nm" || key == "background") {
        if (!value) fail("bad value for " + std::string(key));
        if (key == "period_nm") {
          scan.period_nm = *value;
          have_period = true;
        } else {
          scan.background = *value;
        }
      }
      continue;
    }
    const auto fields = detail::split_fields(line);
    if (fields.size() != 2) fail("expected two columns");
    const auto z = detail::parse_double(fields[0]);
    const auto c = detail::parse_integer(fields[1]);
    if (!z || !c) {
      if (!header && scan.counts.empty()) {
        header = true;
        continue;
      }
      fail("non-numeric field");
    }
    scan.positions_nm.push_back(*z);
    scan.counts.push_back(*c);
  }
  if (!have_period) throw std::domain_error("scan header lacks period_nm");
  scan.validate();
  return scan;
}

FringeScan read_scan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return read_scan(in);
}

}  // namespace kdtl
