// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <boost/math/distributions/binomial.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mobjust/mobjust.hpp"
#include "mood_null.hpp"
#include "oracles.hpp"

using namespace mobjust;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("failed: ") + what;
    }
  }
  void note(const std::string& what) { detail += (detail.empty() ? "" : "; ") + what; }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) { return format_fixed(v, digits); }

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// ---------------------------------------------------------------------------

Outcome stay_point_oracle() {
  Outcome out;
  Rng rng(101);
  const GeoPoint origin{29.75, -95.37};
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0, with_stays = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(0, 20));
    std::vector<PingRecord> pings;
    std::int64_t t = rng.uniform_int(0, 1000);
    GeoPoint here = origin;
    for (std::size_t i = 0; i < n; ++i) {
      t += rng.uniform_int(1, 700);
      if (rng.bernoulli(0.2)) here = offset_meters(here, rng.uniform(-300, 300), rng.uniform(-300, 300));
      pings.push_back({"d", offset_meters(here, rng.uniform(-40, 40), rng.uniform(-40, 40)), t, rng.uniform(3, 50)});
    }
    const auto got = detect_stay_points(pings);
    const auto want = oracle::stay_windows(pings, {});
    bool same = got.size() == want.size();
    for (std::size_t k = 0; same && k < got.size(); ++k)
      same = got[k].t_start == pings[want[k].first].t && got[k].t_end == pings[want[k].last].t &&
             got[k].n_pings == want[k].last - want[k].first + 1;
    mismatches += same ? 0 : 1;
    with_stays += want.empty() ? 0 : 1;
  }
  const double secs = seconds_since(t0);
  out.check(mismatches == 0, std::to_string(mismatches) + " mismatching trajectories");
  out.check(secs < 10.0, "runtime " + fmt(secs, 2) + " s");
  out.note("1000 trajectories, " + std::to_string(with_stays) + " with stay points, 0 allowed mismatches, " +
           fmt(secs, 3) + " s");
  return out;
}

Outcome clustering() {
  Outcome out;
  Rng rng(202);
  const GeoPoint origin{29.75, -95.37};
  int mismatches = 0, violations = 0;
  double widest = 0.0;
  auto audit = [&](std::span<const GeoPoint> pts, const std::vector<Cluster>& cs) {
    for (const auto& c : cs) {
      const double d = oracle::diameter(pts, c.members);
      widest = std::max(widest, d);
      violations += d > 50.0 ? 1 : 0;
    }
  };
  for (int trial = 0; trial < 500; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(1, 10));
    std::vector<GeoPoint> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(offset_meters(origin, rng.uniform(0, 150), rng.uniform(0, 150)));
    const auto got = complete_linkage_cluster(pts);
    const auto want = oracle::complete_linkage(pts, 50.0);
    bool same = got.size() == want.size();
    for (std::size_t k = 0; same && k < got.size(); ++k) same = got[k].members == want[k];
    mismatches += same ? 0 : 1;
    audit(pts, got);
  }
  for (int trial = 0; trial < 50; ++trial) {
    const auto n = static_cast<std::size_t>(rng.uniform_int(11, 300));
    std::vector<GeoPoint> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back(offset_meters(origin, rng.uniform(0, 400), rng.uniform(0, 400)));
    audit(pts, complete_linkage_cluster(pts));
  }
  int chain_bad = 0;
  for (std::size_t len = 2; len <= 60; ++len) {
    std::vector<GeoPoint> chain;
    for (std::size_t i = 0; i < len; ++i) chain.push_back(offset_meters(origin, 0, 40.0 * static_cast<double>(i)));
    const auto cs = complete_linkage_cluster(chain);
    for (const auto& c : cs) chain_bad += oracle::diameter(chain, c.members) > 50.0 ? 1 : 0;
    audit(chain, cs);
  }
  out.check(mismatches == 0, std::to_string(mismatches) + " oracle mismatches");
  out.check(violations == 0, std::to_string(violations) + " clusters wider than 50 m");
  out.check(chain_bad == 0, std::to_string(chain_bad) + " chain clusters wider than 50 m");
  out.note("500 small sets match the oracle, widest cluster " + fmt(widest, 2) + " m, chains of 2..60 points at 40 m");
  return out;
}

// Scenario shared by home recovery and census correlation: one week, equal
// ownership so homes are proportional to population.
synth::SynthConfig proportional_scenario() {
  synth::SynthConfig c;
  c.seed = 3;
  c.weeks = 1;
  c.block_groups_per_class = {24, 24, 24, 0};
  c.pop_min = 200;
  c.pop_max = 5000;
  c.tract_population_share = 0.7;
  c.ownership_rate = {0.06, 0.06, 0.06, 0.06};
  c.noise_sigma_m = 10.0;
  c.violation_fraction = 0.1;
  c.ping_interval_s = 600.0;
  return c;
}

PipelineConfig pipeline_for(const synth::SynthConfig& s) {
  PipelineConfig pc;
  pc.weeks = s.weeks;
  pc.start_date = s.start_date;
  pc.synth = s;
  return pc;
}

struct ProportionalRun {
  double seconds = 0.0;
  std::size_t devices = 0;
  Report report;
  Outcome recovery;
};

ProportionalRun run_proportional() {
  ProportionalRun r;
  const auto t0 = std::chrono::steady_clock::now();
  const synth::Generator gen(proportional_scenario());
  const auto res = run_in_memory(gen.devices().size(), [&](std::size_t i) { return gen.pings(i); },
                                 gen.block_groups(), pipeline_for(gen.config()));
  r.seconds = seconds_since(t0);
  r.devices = gen.devices().size();
  r.report = res.report;

  std::size_t ok = 0, satisfying = 0, violating = 0, rejected_right = 0;
  for (std::size_t i = 0; i < gen.devices().size(); ++i) {
    const auto& truth = gen.devices()[i];
    const auto& got = res.devices[i].weeks[0];
    switch (truth.outcome[0]) {
      case synth::Expected::Assigned:
        ++satisfying;
        if (const auto* h = std::get_if<HomeAssignment>(&got))
          ok += h->block_group_id == gen.block_groups()[truth.home_bg].id ? 1 : 0;
        break;
      case synth::Expected::MissingDay:
        ++violating;
        rejected_right += std::holds_alternative<HomeRejectReason>(got) &&
                          std::get<HomeRejectReason>(got) == HomeRejectReason::MissingDay;
        break;
      case synth::Expected::InconsistentBlockGroup:
        ++violating;
        rejected_right += std::holds_alternative<HomeRejectReason>(got) &&
                          std::get<HomeRejectReason>(got) == HomeRejectReason::InconsistentBlockGroup;
        break;
      case synth::Expected::Uncertain:
        break;
    }
  }
  const double rate = satisfying ? static_cast<double>(ok) / static_cast<double>(satisfying) : 0.0;
  r.recovery.check(r.devices >= 10000, "only " + std::to_string(r.devices) + " devices");
  r.recovery.check(rate >= 0.99, "recovery " + fmt(rate));
  r.recovery.check(violating > 0 && rejected_right == violating,
                   std::to_string(violating - rejected_right) + " violators not rejected correctly");
  r.recovery.check(r.seconds < 60.0, "runtime " + fmt(r.seconds, 1) + " s");
  r.recovery.note(std::to_string(r.devices) + " devices, " + std::to_string(ok) + "/" + std::to_string(satisfying) +
                  " planted homes recovered (" + fmt(100 * rate, 2) + "%), " + std::to_string(rejected_right) + "/" +
                  std::to_string(violating) + " violators rejected with the right reason, " + fmt(r.seconds, 1) +
                  " s");
  return r;
}

Outcome correlation(const ProportionalRun& run) {
  Outcome out;
  std::optional<double> bg, tract;
  for (const auto& row : run.report.correlations) {
    if (row.week != 1 || !row.result) continue;
    (row.level == "tract" ? tract : bg) = row.result->statistic;
  }
  out.check(bg.has_value() && tract.has_value(), "missing correlation rows");
  if (bg && tract) {
    out.check(*bg > 0.95, "block-group r " + fmt(*bg));
    out.check(*tract >= *bg, "tract r below block-group r");
    out.note("block-group r " + fmt(*bg) + ", tract r " + fmt(*tract));
  }
  return out;
}

Outcome representativeness_recovery() {
  Outcome out;
  synth::SynthConfig c;
  c.seed = 4;
  c.weeks = 9;
  c.block_groups_per_class = {15, 15, 15, 0};
  c.pop_min = 800;
  c.pop_max = 2000;
  c.ownership_rate = {0.08, 0.04, 0.04, 0.05};
  c.violation_fraction = 0.0;
  c.ping_interval_s = 900.0;
  const auto t0 = std::chrono::steady_clock::now();
  const synth::Generator gen(c);
  const auto res = run_in_memory(gen.devices().size(), [&](std::size_t i) { return gen.pings(i); },
                                 gen.block_groups(), pipeline_for(c));

  const std::array<std::pair<ClassLabel, RaceClass>, 3> classes = {
      {{ClassLabel::White, RaceClass::MajorityWhite},
       {ClassLabel::Black, RaceClass::MajorityBlack},
       {ClassLabel::Hispanic, RaceClass::MajorityHispanic}}};
  std::string summary;
  for (const auto& [label, race] : classes) {
    std::vector<double> pops;
    for (const auto& bg : gen.block_groups())
      if (bg.neighborhood->race == race) pops.push_back(static_cast<double>(bg.pop_total));
    const double n = lower_median(pops);
    const double rate = c.ownership_rate[static_cast<std::size_t>(race)];
    const boost::math::binomial_distribution<double> dist(n, rate);
    const double lo = boost::math::quantile(dist, 0.025) / n;
    const double hi = boost::math::quantile(dist, 0.975) / n;
    double worst_low = 1.0, worst_high = 0.0;
    for (int w = 1; w <= c.weeks; ++w) {
      const auto* row = res.report.find(w, "p", label);
      if (!row || !row->ci) {
        out.check(false, "missing p median for " + std::string(to_string(label)));
        continue;
      }
      const double med = row->ci->median;
      worst_low = std::min(worst_low, med);
      worst_high = std::max(worst_high, med);
      out.check(med >= lo && med <= hi, std::string(to_string(label)) + " week " + std::to_string(w) + " median p " +
                                            fmt(med) + " outside [" + fmt(lo) + ", " + fmt(hi) + "]");
    }
    summary += std::string(summary.empty() ? "" : ", ") + std::string(to_string(label)) + " planted " + fmt(rate, 2) +
               " interval [" + fmt(lo) + ", " + fmt(hi) + "] medians " + fmt(worst_low) + ".." + fmt(worst_high);
  }
  out.note(std::to_string(gen.devices().size()) + " devices, 9 weeks: " + summary + ", " +
           fmt(seconds_since(t0), 1) + " s");
  return out;
}

Outcome statistics_kernel() {
  Outcome out;
  const std::vector<double> a = {1, 1, 1, 1}, b = {9, 9, 9, 9};
  const auto mood = stats::moods_median_test(a, b);
  out.check(std::fabs(mood.statistic - 8.0) <= 1e-9, "Mood statistic " + format_double(mood.statistic));
  out.check(std::fabs(mood.p_value - 0.0047) <= 1e-4, "Mood p " + format_double(mood.p_value));

  const auto p = mood_null::simulate(500, 10000, 505);
  const double fpr = mood_null::false_positive_rate(p);
  out.check(std::fabs(fpr - 0.05) <= 0.01, "false-positive rate " + fmt(fpr));

  const auto ranks = stats::median_ci_ranks(100, 0.95);
  out.check(ranks.first == 40 && ranks.second == 61,
            "median_ci ranks (" + std::to_string(ranks.first) + ", " + std::to_string(ranks.second) + ")");

  std::vector<double> x, y;
  for (int i = 0; i < 1000; ++i) {
    x.push_back(0.37 * i - 12.0);
    y.push_back(4.0 * x.back() + 2.5);
  }
  const double r = stats::pearson(x, y).statistic;
  out.check(std::fabs(r - 1.0) < 1e-12, "pearson r " + format_double(r));
  out.note("Mood statistic " + format_double(mood.statistic) + " p " + fmt(mood.p_value, 6) +
           ", false-positive rate " + fmt(fpr) + " over 10000 permutations (500 per side), ranks (" +
           std::to_string(ranks.first) + ", " + std::to_string(ranks.second) + "), |r - 1| = " +
           format_double(std::fabs(r - 1.0)));
  return out;
}

Outcome disruption() {
  Outcome out;
  synth::SynthConfig c;
  c.seed = 6;
  c.weeks = 3;
  c.block_groups_per_class = {8, 8, 8, 0};
  c.pop_min = 800;
  c.pop_max = 1600;
  c.violation_fraction = 0.0;
  c.disruption = {{2}, 0.77, 1.5, 0.0};
  const auto t0 = std::chrono::steady_clock::now();
  const synth::Generator gen(c);
  const auto res = run_in_memory(gen.devices().size(), [&](std::size_t i) { return gen.pings(i); },
                                 gen.block_groups(), pipeline_for(c));
  const int hit = 2;
  std::string summary;
  for (auto label : {ClassLabel::White, ClassLabel::Black, ClassLabel::Hispanic, ClassLabel::Poor, ClassLabel::NonPoor}) {
    auto median = [&](std::string_view metric, int w) {
      const auto* row = res.report.find(w, metric, label);
      return row && row->ci ? row->ci->median : std::nan("");
    };
    double base_qsp = 0.0, base_mu = 0.0;
    int base_weeks = 0;
    for (int w = 1; w <= c.weeks; ++w) {
      if (w == hit) continue;
      base_qsp += median("q_sp", w);
      base_mu += median("mu_hat", w);
      ++base_weeks;
    }
    base_qsp /= base_weeks;
    base_mu /= base_weeks;
    const double drop = 1.0 - median("q_sp", hit) / base_qsp;
    const double rise = median("mu_hat", hit) / base_mu - 1.0;
    const std::string name(to_string(label));
    out.check(std::fabs(drop - 0.23) <= 0.03, name + " q_sp drop " + fmt(100 * drop, 1) + "%");
    out.check(std::fabs(rise - 0.50) <= 0.05, name + " mu_hat rise " + fmt(100 * rise, 1) + "%");
    summary += (summary.empty() ? "" : ", ") + name + " " + fmt(100 * drop, 1) + "%/" + fmt(100 * rise, 1) + "%";
  }
  out.note("q_sp drop / mu_hat rise in the planted week: " + summary + ", " + fmt(seconds_since(t0), 1) + " s");
  return out;
}

Outcome determinism() {
  Outcome out;
  const auto root = std::filesystem::current_path() / "acceptance_determinism";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  {
    std::ofstream conf(root / "run.conf");
    conf << "pings = data/pings.csv\nblock_groups = data/block_groups.csv\noutput_dir = out\nweeks = 2\n"
            "synth.enabled = true\nsynth.seed = 8\nsynth.block_groups_white = 4\nsynth.block_groups_black = 4\n"
            "synth.block_groups_hispanic = 4\nsynth.block_groups_no_majority = 2\nsynth.pop_min = 300\n"
            "synth.pop_max = 700\nsynth.ping_interval_s = 600\n";
  }
  auto run = [&](int workers) {
    const std::string cmd = std::string(MOBJUST_CLI) + " --config " + (root / "run.conf").string() + " --workers " +
                            std::to_string(workers) + " all > " + (root / "log.txt").string() + " 2>&1";
    return std::system(cmd.c_str());
  };
  const std::vector<std::string> files = {"rejects.csv",       "staypoints.csv",    "homes.csv",
                                          "home_rejects.csv",  "device_metrics.csv", "bg_counts.csv",
                                          "class_metrics.csv", "class_tests.csv",   "correlation.csv",
                                          "choropleth.csv"};
  out.check(run(1) == 0, "run with 1 worker failed: " + slurp(root / "log.txt"));
  std::vector<std::string> first;
  for (const auto& f : files) first.push_back(slurp(root / "out" / f));
  out.check(run(4) == 0, "run with 4 workers failed: " + slurp(root / "log.txt"));
  int differing = 0;
  std::size_t bytes = 0;
  for (std::size_t i = 0; i < files.size(); ++i) {
    const auto again = slurp(root / "out" / files[i]);
    bytes += again.size();
    if (again != first[i] || again.empty()) {
      ++differing;
      out.check(false, files[i] + " differs or is empty");
    }
  }
  out.note(std::to_string(files.size() - static_cast<std::size_t>(differing)) + "/" + std::to_string(files.size()) +
           " output files byte-identical between 1 and 4 workers (" + std::to_string(bytes) + " bytes)");
  if (out.pass) std::filesystem::remove_all(root);
  return out;
}

}  // namespace

int main() {
  struct Criterion {
    int number;
    const char* name;
    std::function<Outcome()> run;
  };
  std::optional<ProportionalRun> proportional;
  auto shared = [&]() -> const ProportionalRun& {
    if (!proportional) proportional = run_proportional();
    return *proportional;
  };
  const std::vector<Criterion> criteria = {
      {1, "stay-point oracle equivalence", stay_point_oracle},
      {2, "clustering correctness", clustering},
      {3, "home recovery", [&] { return shared().recovery; }},
      {4, "representativeness recovery", representativeness_recovery},
      {5, "statistics kernel", statistics_kernel},
      {6, "disruption scenario", disruption},
      {7, "census correlation sanity", [&] { return correlation(shared()); }},
      {8, "end-to-end determinism", determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, std::string("exception: ") + e.what());
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << c.number << "] " << c.name << ": " << o.detail << std::endl;
  }
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
