// Copyright 2026 The flowgame Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Pass criterion ids (AC1 AC4 ...) to run a subset.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "flowgame/harness/experiments.hpp"
#include "flowgame/neural/grad_check.hpp"
#include "flowgame/treeclf/regions.hpp"

using namespace flowgame;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

constexpr std::uint64_t kRoot = 20260101;

Verdict ac1_gradients() {
  Rng rng(1);
  std::vector<std::pair<std::string, Mlp>> nets;
  nets.emplace_back("fast-actor", make_fast_actor(FastConfig{}, rng));
  nets.emplace_back("fast-critic", make_fast_critic(FastConfig{}, rng));
  nets.emplace_back("dqn", make_q_network(EpisodicConfig{}, rng));
  nets.emplace_back("continual", make_continual_net(ContinualConfig{}, rng));
  CoevoConfig co;
  co.total_steps = 0;
  CoevoData data{std::vector<FeatureVector>(4), std::vector<FeatureVector>(4)};
  CyberMarl game(co, data, [](const FeatureVector& z) { return z[0]; }, [](const FeatureVector& z) { return z; }, 2);
  nets.emplace_back("coevo-attacker", game.attacker_net());
  nets.emplace_back("coevo-defender", game.defender_net());
  nets.emplace_back("coevo-critic", game.critic_net());
  co.use_fixed_c_input = false;
  CyberMarl plain(co, data, [](const FeatureVector& z) { return z[0]; }, [](const FeatureVector& z) { return z; }, 2);
  nets.emplace_back("coevo-defender-noskip", plain.defender_net());

  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, net] : nets) {
    double e = grad_check(net, 11);
    if (e >= worst) worst = e, worst_name = name;
  }
  return {worst < 1e-4, fmt("max_rel_err=%.3g (%s) over %zu networks", worst, worst_name.c_str(), nets.size())};
}

Verdict ac2_budget_sweep() {
  const std::vector<double> budgets{0.001, 0.003, 0.01, 0.03, 0.1};
  const std::size_t seeds = 5;
  std::vector<std::vector<double>> rate(seeds, std::vector<double>(budgets.size()));
  for (std::size_t s = 0; s < seeds; ++s) {
    std::uint64_t seed = replicate_seed(kRoot, s);
    World w = build_world(WorldConfig{}, seed);
    for (std::size_t b = 0; b < budgets.size(); ++b) {
      FastConfig c;
      c.budget = budgets[b];
      rate[s][b] = run_fast(w, c, seed).curve.back().eval.attack_rate;
    }
  }
  std::vector<double> mean(budgets.size(), 0.0);
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    for (std::size_t s = 0; s < seeds; ++s) mean[b] += rate[s][b] / seeds;
  }
  bool ordered = true;
  for (std::size_t b = 0; b + 1 < budgets.size(); ++b) {
    std::size_t agree = 0;
    for (std::size_t s = 0; s < seeds; ++s) agree += rate[s][b + 1] >= rate[s][b];
    ordered = ordered && 2 * agree > seeds;
  }
  std::string d = "mean rates";
  for (std::size_t b = 0; b < budgets.size(); ++b) d += fmt(" %g:%.4f", budgets[b], mean[b]);
  d += ordered ? " ordering=majority" : " ordering=violated";
  return {ordered && mean.back() >= 0.90 && mean.front() <= 0.10, d};
}

Verdict ac3_hardening() {
  bool ok = true;
  std::string d;
  WorldConfig wc;
  for (std::size_t s = 0; s < 3; ++s) {
    std::uint64_t seed = replicate_seed(kRoot, s);
    World w = build_world(wc, seed);
    auto r = run_harden(w, wc, EpisodicConfig{}, seed);
    ok = ok && r.harden.rate_before >= 0.80 && r.harden.rate_after <= 0.20;
    d += fmt("%sseed%zu %.3f->%.3f (n_adv=%zu)", s ? " " : "", s, r.harden.rate_before, r.harden.rate_after,
             r.harden.n_adversarial);
  }
  return {ok, d};
}

Verdict ac4_invariants() {
  std::uint64_t seed = replicate_seed(kRoot, 0);
  World w = build_world(WorldConfig{}, seed);
  CoevoConfig c;
  c.total_steps = 100000;
  c.alpha = 0.1;
  c.beta = 0.4;
  auto game = make_cybermarl(w, c, seed);
  auto r = game.run();
  const double n = static_cast<double>(r.sources.total());
  auto within = [n](std::uint64_t k, double p) { return std::abs(k - n * p) <= 3.0 * std::sqrt(n * p * (1 - p)); };
  bool mix = within(r.sources.adversarial, 0.1) && within(r.sources.benign, 0.4) && within(r.sources.malicious, 0.5);
  bool rewards = r.min_raw_reward >= 0.0 && r.max_raw_reward <= 1.0;
  bool windows = r.windows.size() == static_cast<std::size_t>(c.total_steps / c.window);
  bool ok = r.delay_violations == 0 && mix && rewards && windows && n == c.total_steps;
  return {ok, fmt("violations=%llu draws=%llu mix=%.4f/%.4f/%.4f rewards=[%g,%g] windows=%zu", (unsigned long long)r.delay_violations,
                  (unsigned long long)r.adv_draws, r.sources.adversarial / n, r.sources.benign / n, r.sources.malicious / n,
                  r.min_raw_reward, r.max_raw_reward, r.windows.size())};
}

Verdict ac5_reduction() {
  std::uint64_t seed = replicate_seed(kRoot, 0);
  World w = build_world(WorldConfig{}, seed);
  FastConfig fc;
  // Same stream for both learners: identical init, flows, noise and batches.
  auto fast = run_fast(w, fc, seed, "reduction");
  CoevoConfig c;
  c.freeze_defender = true;
  c.whitelist = false;
  c.budget = fc.budget;
  c.total_steps = fc.train_steps;
  c.attacker_lr = fc.actor_lr;
  c.critic_lr = fc.critic_lr;
  auto game = make_cybermarl(w, c, seed, "reduction");
  auto r = game.run();
  double a = evaluate_attacker(w.score(), fast.attacker, w.eval_malicious, fc.lambda_reg).attack_rate;
  double b = evaluate_attacker(w.score(), r.attacker, w.eval_malicious, fc.lambda_reg).attack_rate;
  return {std::abs(a - b) <= 0.02, fmt("fast=%.4f cybermarl_frozen=%.4f gap=%.4f", a, b, std::abs(a - b))};
}

Verdict ac6_continual() {
  std::size_t passed = 0;
  double worst_spread = 0.0;
  std::string d;
  for (std::size_t s = 0; s < 5; ++s) {
    std::uint64_t seed = replicate_seed(kRoot, s);
    auto r = compare_strategies(two_mode_switch(), ContinualConfig{}, seed);
    bool ok = r.naive < 0.60 && r.replay >= r.naive + 0.10 && r.agem >= r.naive + 0.10;
    passed += ok;
    d += fmt("seed%zu naive=%.3f replay=%.3f agem=%.3f; ", s, r.naive, r.replay, r.agem);
    // Stationary stream: mode 0 is always active.
    auto st = compare_strategies(stationary_schedule(), ContinualConfig{}, seed);
    double hi = std::max({st.naive, st.replay, st.agem}), lo = std::min({st.naive, st.replay, st.agem});
    worst_spread = std::max(worst_spread, hi - lo);
  }
  d += fmt("separation %zu/5, stationary max spread=%.4f", passed, worst_spread);
  return {passed >= 4 && worst_spread <= 0.02, d};
}

Verdict ac7_shift() {
  bool ok = true;
  std::string d;
  WorldConfig wc;
  for (std::size_t s = 0; s < 5; ++s) {
    std::uint64_t seed = replicate_seed(kRoot, s);
    World w = build_world(wc, seed);
    auto r = shift_check(w, wc, seed);
    ok = ok && r.shifted.accuracy < r.in_distribution.accuracy && r.shifted.fpr > r.in_distribution.fpr;
    d += fmt("%sseed%zu acc %.4f->%.4f fpr %.4f->%.4f", s ? " " : "", s, r.in_distribution.accuracy, r.shifted.accuracy,
             r.in_distribution.fpr, r.shifted.fpr);
  }
  return {ok, d};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Every CSV and plot file under `a` must match its twin under `b` byte for byte.
std::size_t compare_trees(const fs::path& a, const fs::path& b, bool& same) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    auto ext = e.path().extension();
    if (ext != ".csv" && ext != ".dat") continue;
    auto twin = b / fs::relative(e.path(), a);
    same = same && fs::exists(twin) && slurp(e.path()) == slurp(twin);
    ++n;
  }
  return n;
}

template <class E>
Verdict rerun(const KeyValues& kv, std::size_t& files) {
  fs::path base = fs::temp_directory_path() / (std::string("flowgame_ac8_") + E::kName);
  fs::remove_all(base);
  run_experiment(E{}, kv, base / "a");
  run_experiment(E{}, kv, base / "b");
  bool same = true;
  files += compare_trees(base / "a", base / "b", same);
  fs::remove_all(base);
  return {same, ""};
}

Verdict ac8_reproducible() {
  std::size_t files = 0;
  std::vector<std::string> bad;
  auto check = [&](const char* name, Verdict v) {
    if (!v.pass) bad.push_back(name);
  };
  const std::string small_world = "n_train = 1000\nn_test = 1000\nn_norm_reference = 5000\nn_eval_malicious = 200\nn_trees = 20\n";
  check("gen-data", rerun<GenDataExperiment>(parse_kv_string("n_benign = 300\nn_malicious = 300\n"), files));
  check("train-classifier", rerun<TrainClassifierExperiment>(parse_kv_string(small_world), files));
  check("attack-fast", rerun<AttackFastExperiment>(parse_kv_string(small_world + "train_steps = 1000\neval_interval = 250\n"), files));
  check("harden", rerun<HardenExperiment>(parse_kv_string(small_world + "train_steps = 1000\n"), files));
  check("cybermarl", rerun<CybermarlExperiment>(parse_kv_string(small_world + "total_steps = 2000\nwindow = 500\n"), files));
  check("continual", rerun<ContinualExperiment>(parse_kv_string("phase_length = 2000\neval_interval = 500\nstrategy = agem\n"), files));
  std::string d = fmt("%zu files compared", files);
  for (const auto& b : bad) d += " differs:" + b;
  return {bad.empty() && files > 0, d};
}

TreeEnsemble stump(std::int32_t j, double t) {
  TreeEnsemble m(kNumFeatures, 0.0, 1.0);
  m.add_tree(RegressionTree::stump(j, t, -5.0, 5.0));
  return m;
}

Verdict ac9_oracles() {
  // (a) brute-force grid vs region analysis on a 2-feature, depth-2 ensemble.
  Rng rng(9);
  LabeledMatrix data{FeatureMatrix(2), {}};
  for (int i = 0; i < 600; ++i) {
    bool mal = i % 2;
    data.x.push_row(std::vector<double>{gaussian(rng, mal ? 2.0 : 0.0), gaussian(rng, mal ? 2.0 : 0.0)});
    data.y.push_back(mal ? Label::Malicious : Label::Benign);
  }
  auto m = train_trees(data, TreeParams{3, 2, 0.5, 10});
  const int G = 200;
  const double lo = -4.0, hi = 6.0, h = (hi - lo) / G;
  std::size_t checked = 0, agree = 0;
  for (int k = 0; k < 40; ++k) {
    std::vector<double> x0{lo + (hi - lo) * uniform01(rng), lo + (hi - lo) * uniform01(rng)};
    if (m.predict(x0) != Label::Malicious) continue;
    auto exact = exact_min_evasion(m, x0);
    double grid = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= G; ++i)
      for (int j = 0; j <= G; ++j) {
        std::vector<double> p{lo + i * h, lo + j * h};
        if (m.predict(p) == Label::Benign) grid = std::min(grid, std::hypot(p[0] - x0[0], p[1] - x0[1]));
      }
    ++checked;
    agree += exact && exact->distance <= grid + 1e-12 && grid - exact->distance <= h * std::sqrt(2.0) + 1e-9;
  }

  // (b) DQN against a single stump on normalized inputs.
  EpisodicConfig c;
  c.train_steps = 20000;
  auto st = stump(0, 0.0);
  ScoreFn score = raw_blackbox(st);
  auto draw = [&](Rng& r, std::size_t n) {
    std::vector<FeatureVector> out(n);
    for (auto& z : out) {
      for (auto& v : z) v = gaussian(r);
      z[0] = c.step_size * 10.0 * uniform01(r) + 1e-6;  // gap up to 10 steps, half solvable
    }
    return out;
  };
  Rng tr(10), ev(11);
  auto dqn = train_dqn_attacker(score, draw(tr, 2000), c, 12);
  std::size_t solvable = 0, solved = 0;
  for (const auto& z : draw(ev, 2000)) {
    // Gap in steps, with a margin so float rounding cannot decide the case.
    double gap = z[0] / c.step_size;
    if (gap > c.max_steps - 0.01) continue;
    ++solvable;
    solved += run_episode(score, dqn.attacker, z).fooled;
  }
  double frac = solvable ? double(solved) / solvable : 0.0;
  return {checked > 5 && agree == checked && frac >= 0.95,
          fmt("grid/region agree %zu/%zu; stump attacker solved %zu/%zu (%.4f)", agree, checked, solved, solvable, frac)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> all{
      {"AC1", ac1_gradients}, {"AC2", ac2_budget_sweep}, {"AC3", ac3_hardening},
      {"AC4", ac4_invariants}, {"AC5", ac5_reduction},   {"AC6", ac6_continual},
      {"AC7", ac7_shift},      {"AC8", ac8_reproducible}, {"AC9", ac9_oracles}};
  std::set<std::string> only(argv + 1, argv + argc);
  int failed = 0;
  for (const auto& [id, fn] : all) {
    if (!only.empty() && !only.count(id)) continue;
    auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %s %s [%.1fs]\n", id.c_str(), v.pass ? "PASS" : "FAIL", v.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
