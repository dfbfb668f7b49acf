#include "qalign/eval/roc.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>

#include "qalign/errors.hpp"
#include "qalign/io/csv.hpp"

namespace qalign::eval {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double time_or_inf(const TrialResult& r) { return r.converged ? *r.time_s : kInf; }

void require_nonempty(std::span<const TrialResult> results, const char* who) {
  if (results.empty()) throw DomainError(std::string(who) + ": empty result set");
}

template <class Int>
Int parse_int(const std::string& s, const char* field) {
  Int v{};
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw ConfigError(std::string("trials csv: bad ") + field + " '" + s + "'");
  }
  return v;
}

}  // namespace

Policy parse_policy(std::string_view s) {
  if (s == "heuristic") return Policy::heuristic;
  if (s == "rl") return Policy::rl;
  throw ConfigError("unknown policy '" + std::string(s) + "'");
}

double accuracy_at(std::span<const TrialResult> results, double threshold_s) {
  require_nonempty(results, "accuracy_at");
  const auto n = std::count_if(results.begin(), results.end(),
                               [&](const TrialResult& r) { return r.converged && *r.time_s < threshold_s; });
  return double(n) / double(results.size());
}

double exact_auc(std::span<const TrialResult> results, double horizon_s) {
  require_nonempty(results, "exact_auc");
  if (!(horizon_s > 0.0)) throw DomainError("exact_auc: horizon must be > 0");
  double area = 0.0;
  for (const auto& r : results) {
    if (r.converged) area += std::max(0.0, horizon_s - *r.time_s);
  }
  return area / (double(results.size()) * horizon_s);
}

RocCurve roc_curve(std::span<const TrialResult> results, int n_thresholds, double horizon_s) {
  if (n_thresholds < 2) throw DomainError("roc_curve: n_thresholds must be >= 2");
  require_nonempty(results, "roc_curve");
  RocCurve c;
  c.thresholds_s.resize(n_thresholds);
  c.accuracy.resize(n_thresholds);

  std::vector<double> times;
  for (const auto& r : results) {
    if (r.converged) times.push_back(*r.time_s);
  }
  std::sort(times.begin(), times.end());
  const double n = double(results.size());
  for (int i = 0; i < n_thresholds; ++i) {
    const double t = horizon_s * double(i) / double(n_thresholds - 1);
    c.thresholds_s[i] = t;
    c.accuracy[i] = double(std::lower_bound(times.begin(), times.end(), t) - times.begin()) / n;
  }
  c.auc = exact_auc(results, horizon_s);
  return c;
}

double median_time(std::span<const TrialResult> results) {
  require_nonempty(results, "median_time");
  std::vector<double> t;
  for (const auto& r : results) t.push_back(time_or_inf(r));
  std::sort(t.begin(), t.end());
  const std::size_t m = t.size() / 2;
  if (t.size() % 2 == 1) return t[m];
  if (std::isinf(t[m - 1]) || std::isinf(t[m])) return std::max(t[m - 1], t[m]);
  return 0.5 * (t[m - 1] + t[m]);
}

ComparisonReport compare_policies(std::span<const TrialResult> ha, std::span<const TrialResult> rl,
                                  int n_thresholds, double horizon_s) {
  require_nonempty(ha, "compare_policies");
  require_nonempty(rl, "compare_policies");
  if (ha.size() != rl.size()) throw PairingError("compare_policies: result sets differ in size");

  auto key = [](const TrialResult& r) {
    return std::make_tuple(r.trial_id, r.seed, r.start.r_um, r.start.theta_rad, r.start.z_um);
  };
  std::map<long long, const TrialResult*> by_id;
  for (const auto& r : ha) {
    if (!by_id.emplace(r.trial_id, &r).second) throw PairingError("compare_policies: duplicate trial_id");
  }

  ComparisonReport out;
  double wins = 0.0;
  for (const auto& r : rl) {
    const auto it = by_id.find(r.trial_id);
    if (it == by_id.end() || key(*it->second) != key(r)) {
      throw PairingError("compare_policies: trial " + std::to_string(r.trial_id) + " is not paired");
    }
    const double th = time_or_inf(*it->second), tr = time_or_inf(r);
    wins += tr < th ? 1.0 : (tr == th ? 0.5 : 0.0);
  }
  out.roc_ha = roc_curve(ha, n_thresholds, horizon_s);
  out.roc_rl = roc_curve(rl, n_thresholds, horizon_s);
  out.auc_ha = out.roc_ha.auc;
  out.auc_rl = out.roc_rl.auc;
  out.delta = out.auc_rl - out.auc_ha;
  out.median_ha_s = median_time(ha);
  out.median_rl_s = median_time(rl);
  out.win_rate = wins / double(rl.size());
  return out;
}

void write_trials_csv(std::ostream& os, std::span<const TrialResult> results) {
  os << "trial_id,policy,seed,r0_um,theta0_rad,z0_um,converged,time_s\n";
  for (const auto& r : results) {
    io::CsvRow row;
    row.add(r.trial_id)
        .add(to_string(r.policy))
        .add(std::string_view(std::to_string(r.seed)))
        .add(r.start.r_um)
        .add(r.start.theta_rad)
        .add(r.start.z_um)
        .add(r.converged ? 1 : 0)
        .add(r.time_s);
    os << row;
  }
}

std::vector<TrialResult> read_trials_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "trial_id,policy,seed,r0_um,theta0_rad,z0_um,converged,time_s") {
    throw ConfigError("trials csv: missing or unexpected header");
  }
  std::vector<TrialResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = io::split_csv_line(line);
    if (f.size() != 8) throw ConfigError("trials csv: expected 8 fields in '" + line + "'");
    TrialResult r;
    r.trial_id = parse_int<long long>(f[0], "trial_id");
    r.policy = parse_policy(f[1]);
    r.seed = parse_int<std::uint64_t>(f[2], "seed");
    r.start = env::Pose{io::parse_double(f[3]), io::parse_double(f[4]), io::parse_double(f[5])};
    r.converged = parse_int<int>(f[6], "converged") != 0;
    if (r.converged) {
      if (f[7].empty()) throw ConfigError("trials csv: converged trial without time_s");
      r.time_s = io::parse_double(f[7]);
    }
    out.push_back(r);
  }
  return out;
}

void write_roc_csv(std::ostream& os, const RocCurve& curve) {
  os << "threshold_s,accuracy\n";
  for (std::size_t i = 0; i < curve.thresholds_s.size(); ++i) {
    io::CsvRow row;
    row.add(curve.thresholds_s[i]).add(curve.accuracy[i]);
    os << row;
  }
}

void write_report(std::ostream& os, const ComparisonReport& r) {
  os << "auc_ha,auc_rl,delta,median_ha_s,median_rl_s,win_rate\n";
  io::CsvRow row;
  row.add(r.auc_ha).add(r.auc_rl).add(r.delta).add(r.median_ha_s).add(r.median_rl_s).add(r.win_rate);
  os << row;
}

}  // namespace qalign::eval
