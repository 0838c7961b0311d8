#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "weave/errors.hpp"
#include "weave/stats/calibration.hpp"
#include "weave/stats/effects.hpp"
#include "weave/stats/evaluator_metrics.hpp"
#include "weave/stats/hypothesis.hpp"
#include "weave/stats/kernels.hpp"
#include "weave/stats/panel.hpp"
#include "weave/stats/synthetic.hpp"

using namespace weave;
using namespace weave::stats;

namespace {

const std::filesystem::path kFixtures(WEAVE_TEST_FIXTURES);

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Plain group means over a balanced cube, one pass per factor.
MarginalFit group_mean_oracle(const std::vector<double>& y, CubeShape s) {
  MarginalFit f;
  f.mu = mean(y);
  f.alpha.assign(s.n_e, 0.0);
  f.beta.assign(s.n_j, 0.0);
  f.gamma.assign(s.n_t, 0.0);
  for (std::size_t i = 0; i < s.n_e; ++i) {
    std::vector<double> g;
    for (std::size_t j = 0; j < s.n_j; ++j)
      for (std::size_t t = 0; t < s.n_t; ++t) g.push_back(y[(i * s.n_j + j) * s.n_t + t]);
    f.alpha[i] = mean(g) - f.mu;
  }
  for (std::size_t j = 0; j < s.n_j; ++j) {
    std::vector<double> g;
    for (std::size_t i = 0; i < s.n_e; ++i)
      for (std::size_t t = 0; t < s.n_t; ++t) g.push_back(y[(i * s.n_j + j) * s.n_t + t]);
    f.beta[j] = mean(g) - f.mu;
  }
  for (std::size_t t = 0; t < s.n_t; ++t) {
    std::vector<double> g;
    for (std::size_t i = 0; i < s.n_e; ++i)
      for (std::size_t j = 0; j < s.n_j; ++j) g.push_back(y[(i * s.n_j + j) * s.n_t + t]);
    f.gamma[t] = mean(g) - f.mu;
  }
  return f;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(std::fabs(a[k] - b[k]) <= tol);
}

ScorePanel unbalanced_panel() {
  ScorePanel p(false);
  for (int i = 0; i < 3; ++i)
    for (int j = 1; j <= 2; ++j)
      for (int t = 0; t < 5; ++t) {
        if ((i + j + t) % 7 == 0) continue;
        const double y = 3 + 0.3 * t - 0.2 * i + 0.1 * j + ((i * 7 + j * 3 + t * 5) % 11) / 10.0;
        p.add({"e" + std::to_string(i), j, "t" + std::to_string(t), "Readability", y});
      }
  return p;
}

SyntheticParams shaped(std::size_t n_e, std::size_t n_j, std::size_t n_t, std::uint64_t seed) {
  SyntheticParams p;
  p.n_e = n_e;
  p.n_j = n_j;
  p.n_t = n_t;
  p.seed = seed;
  return p;
}

SyntheticParams null_params(std::uint64_t seed) {
  SyntheticParams p;
  p.seed = seed;
  return p;
}

}  // namespace

TEST_CASE("panel rejects bad cells") {
  ScorePanel p;
  p.add({"a", 1, "t", "Readability", 3});
  CHECK_THROWS_AS(p.add({"a", 1, "t", "Readability", 4}), SchemaError);
  CHECK_THROWS_AS(p.add({"a", 2, "t", "Readability", 6}), RangeError);
  CHECK_THROWS_AS(p.add({"a", 2, "t", "Readability", NAN}), RangeError);
  ScorePanel open(false);
  CHECK_NOTHROW(open.add({"a", 1, "t", "Readability", 7.5}));
}

TEST_CASE("panel CSV round trips") {
  const auto sp = [] {
    auto p = shaped(3, 2, 4, 3);
    p.label_scale = true;
    return generate_synthetic_panel(p);
  }();
  const auto path = std::filesystem::temp_directory_path() / "weave_panel.csv";
  save_panel_csv(sp.panel, path);
  CHECK(load_panel_csv(path) == sp.panel);
  std::ofstream(path) << "evaluator,run,text,attribute,score\na,1,t,Readability,9\n";
  CHECK_THROWS_AS(load_panel_csv(path), SchemaError);
  std::ofstream(path) << "evaluator,run,text,score\na,1,t,3\n";
  CHECK_THROWS_AS(load_panel_csv(path), SchemaError);
}

TEST_CASE("constant panel has no effects") {
  ScorePanel p;
  for (int i = 0; i < 3; ++i)
    for (int j = 1; j <= 3; ++j)
      for (int t = 0; t < 4; ++t) p.add({"e" + std::to_string(i), j, "t" + std::to_string(t), "Readability", 3});
  const auto d = fit_effects(p, "Readability");
  CHECK(d.mu == doctest::Approx(3.0));
  for (double x : d.alpha) CHECK(x == doctest::Approx(0.0));
  for (double x : d.gamma) CHECK(x == doctest::Approx(0.0));
  for (double x : d.residuals) CHECK(x == doctest::Approx(0.0));
  const PanelView v(p, "Readability");
  const auto text = test_text_effect(v, d);
  CHECK(text.statistic == 0.0);
  CHECK(text.p_value == 1.0);
  CHECK(!text.reject);
}

TEST_CASE("noise-free planted effects are recovered exactly") {
  SyntheticParams p;
  p.noise_sd = 0.0;
  p.n_e = 4;
  p.n_j = 3;
  p.n_t = 6;
  p.alpha.values = {0.3, -0.1, -0.4, 0.2};
  p.beta.values = {0.0, 0.5, 0.5};
  p.gamma.values = {1, 2, 3, 4, 5, 6};
  const auto sp = generate_synthetic_panel(p);
  const auto attr = sp.attributes.front();
  const auto d = fit_effects(sp.panel, attr);
  CHECK(d.mu == doctest::Approx(sp.planted.mu).epsilon(1e-12));
  check_close(d.alpha, sp.planted.alpha.at(attr), 1e-9);
  check_close(d.gamma, sp.planted.gamma.at(attr), 1e-9);
  check_close(d.beta, sp.planted.beta, 1e-9);
  for (double r : d.residuals) CHECK(std::fabs(r) < 1e-9);
  // Explicit vectors are centred and the shift moves into mu.
  CHECK(sp.planted.mu == doctest::Approx(3.0 + 3.5 + 1.0 / 3.0 + 0.0));
}

TEST_CASE("balanced fit equals the group-mean oracle") {
  SyntheticParams p;
  p.gamma.sd = 1.0;
  p.alpha.sd = 0.3;
  p.beta.sd = 0.1;
  p.seed = 11;
  const auto sp = generate_synthetic_panel(p);
  const PanelView v(sp.panel, sp.attributes.front());
  REQUIRE(v.balanced());
  const CubeShape shape{v.n_e(), v.n_j(), v.n_t()};
  const auto y = v.cube();
  const auto want = group_mean_oracle(y, shape);

  const auto d = fit_effects(v);
  CHECK(std::fabs(d.mu - want.mu) < 1e-9);
  check_close(d.alpha, want.alpha, 1e-9);
  check_close(d.beta, want.beta, 1e-9);
  check_close(d.gamma, want.gamma, 1e-9);

  const auto par = kernels::marginal_means(y, shape);
  const auto ser = reference::marginal_means(y, shape);
  CHECK(std::fabs(par.mu - ser.mu) < 1e-12);
  check_close(par.alpha, ser.alpha, 1e-12);
  check_close(par.beta, ser.beta, 1e-12);
  check_close(par.gamma, ser.gamma, 1e-12);
  for (FactorMask mask : {FactorMask{}, FactorMask{true, true, false}, FactorMask{false, true, true}}) {
    check_close(kernels::residuals(y, shape, par, mask), reference::residuals(y, shape, ser, mask), 1e-12);
  }
  CHECK(kernels::sum_of_squares(y) == doctest::Approx(reference::sum_of_squares(y)).epsilon(1e-12));

  const auto ls = fit_effects_least_squares(v);
  CHECK(std::fabs(ls.mu - d.mu) < 1e-9);
  check_close(ls.alpha, d.alpha, 1e-9);
  check_close(ls.beta, d.beta, 1e-9);
  check_close(ls.gamma, d.gamma, 1e-9);
  check_close(ls.residuals, d.residuals, 1e-9);
}

TEST_CASE("least squares reconstructs an unbalanced panel") {
  const auto p = unbalanced_panel();
  const PanelView v(p, "Readability");
  REQUIRE(!v.balanced());
  const auto d = fit_effects(v);
  // Reference intercept and SSE from an effect-coded OLS fit of the same data.
  CHECK(d.mu == doctest::Approx(4.094528832630102).epsilon(1e-10));
  CHECK(d.sse() == doctest::Approx(2.1053938115330513).epsilon(1e-10));
  CHECK(std::fabs(std::accumulate(d.alpha.begin(), d.alpha.end(), 0.0)) < 1e-10);
  CHECK(std::fabs(std::accumulate(d.beta.begin(), d.beta.end(), 0.0)) < 1e-10);
  CHECK(std::fabs(std::accumulate(d.gamma.begin(), d.gamma.end(), 0.0)) < 1e-10);
  for (std::size_t k = 0; k < v.cells.size(); ++k) {
    const auto& c = v.cells[k];
    CHECK(d.mu + d.alpha[c.i] + d.beta[c.j] + d.gamma[c.t] + d.residuals[k] ==
          doctest::Approx(c.y).epsilon(1e-12));
  }
}

TEST_CASE("nested F tests match an independent OLS comparison") {
  const auto p = unbalanced_panel();
  const PanelView v(p, "Readability");
  const auto d = fit_effects(v);
  const auto text = test_text_effect(v, d);
  CHECK(text.statistic == doctest::Approx(12.413920736371319).epsilon(1e-9));
  CHECK(text.p_value == doctest::Approx(3.942385311921983e-05).epsilon(1e-7));
  CHECK(text.df1 == 4);
  CHECK(text.df2 == 19);
  CHECK(text.reject);
  const auto rater = test_rater_effect(v, d);
  CHECK(rater.statistic == doctest::Approx(1.1275127151604216).epsilon(1e-9));
  CHECK(rater.p_value == doctest::Approx(0.34456704182647824).epsilon(1e-9));
  CHECK(!rater.reject);
}

TEST_CASE("rank-deficient designs are refused") {
  ScorePanel p(false);
  // Evaluator e1 only sees t1 and e0 only sees t0: text and rater are confounded.
  p.add({"e0", 1, "t0", "Readability", 1});
  p.add({"e0", 2, "t0", "Readability", 2});
  p.add({"e1", 1, "t1", "Readability", 3});
  p.add({"e1", 2, "t1", "Readability", 4});
  CHECK_THROWS_AS(fit_effects(PanelView(p, "Readability")), DegenerateDesign);
  ScorePanel one(false);
  one.add({"e0", 1, "t0", "Readability", 1});
  one.add({"e0", 1, "t1", "Readability", 2});
  CHECK_THROWS_AS(fit_effects(PanelView(one, "Readability")), DegenerateDesign);
}

TEST_CASE("distribution tails match reference values") {
  CHECK(f_upper_p(3.2, 4, 27) == doctest::Approx(0.028357603853484778).epsilon(1e-10));
  CHECK(t_two_sided_p(2.1, 9) == doctest::Approx(0.06511828241215198).epsilon(1e-10));
  CHECK(t_two_sided_p(-2.1, 9) == doctest::Approx(0.06511828241215198).epsilon(1e-10));
  CHECK(f_upper_p(INFINITY, 2, 3) == 0.0);
}

TEST_CASE("one-sample t test") {
  const std::vector<double> x = {0.3, -0.1, 0.8, 0.5, 0.2, -0.4};
  // t = mean / (sd / sqrt(n)), computed here directly.
  const double m = mean(x);
  const double sd = std::sqrt(sample_variance(x));
  const auto r = one_sample_t_test(x);
  CHECK(r.t == doctest::Approx(m / (sd / std::sqrt(6.0))).epsilon(1e-12));
  CHECK(r.t == doctest::Approx(1.2451741707874966).epsilon(1e-10));
  CHECK(r.p == doctest::Approx(0.268241155071404).epsilon(1e-10));
  CHECK(r.df == 5);
  const std::vector<double> zeros(5, 0.0);
  const auto z = one_sample_t_test(zeros);
  CHECK(z.t == 0.0);
  CHECK(z.p == 1.0);
  const std::vector<double> shifted(5, 0.2);
  CHECK(one_sample_t_test(shifted).p == 0.0);
}

TEST_CASE("Levene and one-way ANOVA on five per group") {
  const std::vector<std::vector<double>> g = {
      {2.1, 3.4, 1.9, 5.0, 4.2}, {3.3, 3.1, 3.6, 2.9, 3.4}, {1.0, 6.0, 2.5, 4.5, 3.0}};
  const auto lev = levene(g);
  CHECK(lev.f == doctest::Approx(4.699148618371918).epsilon(1e-10));
  CHECK(lev.p == doctest::Approx(0.031103709070668926).epsilon(1e-9));
  CHECK(lev.df1 == 2);
  CHECK(lev.df2 == 12);
  const auto a = one_way_anova(g);
  CHECK(a.f == doctest::Approx(0.01339366515837105).epsilon(1e-9));
  CHECK(a.p == doctest::Approx(0.986710359358016).epsilon(1e-9));
  // Levene is the ANOVA of absolute deviations from group means.
  std::vector<std::vector<double>> dev = g;
  for (auto& grp : dev) {
    const double m = mean(grp);
    for (auto& x : grp) x = std::fabs(x - m);
  }
  CHECK(one_way_anova(dev).f == doctest::Approx(lev.f).epsilon(1e-12));
  CHECK_THROWS_AS(one_way_anova({{1, 2, 3}}), DegenerateDesign);
  const std::vector<std::vector<double>> flat = {{1, 1}, {2, 2}};
  CHECK(levene(flat).f == 0.0);
  CHECK(levene(flat).p == 1.0);
}

TEST_CASE("slope t test") {
  const std::vector<double> x = {1, 2, 3, 1, 2, 3, 1, 2, 3};
  const std::vector<double> y = {0.1, 0.4, 0.5, -0.2, 0.3, 0.2, 0.0, 0.1, 0.9};
  const auto r = slope_t_test(x, y);
  CHECK(r.t == doctest::Approx(0.2833333333333334 / 0.09004701887606055).epsilon(1e-10));
  CHECK(r.p == doctest::Approx(0.016231076405109995).epsilon(1e-9));
  CHECK(r.df == 7);
}

TEST_CASE("run trend needs three runs") {
  const auto sp = generate_synthetic_panel(shaped(3, 2, 5, 4));
  const PanelView v(sp.panel, sp.attributes.front());
  const auto no_run = fit_effects(v, {.text = true, .evaluator = true, .run = false});
  CHECK_THROWS_AS(test_run_trend(v, no_run), DegenerateDesign);
  const auto battery = run_battery(v);
  CHECK(battery.size() == 7);
  for (const auto& r : battery) CHECK(r.test_name != "run_trend");
}

TEST_CASE("battery order and planted effects") {
  SyntheticParams p;
  p.gamma.sd = 1.0;
  p.alpha.values = {0.4, 0.3, 0.2, 0.1, 0.0, -0.1, -0.2, -0.3, -0.4};
  p.seed = 21;
  const auto sp = generate_synthetic_panel(p);
  const auto battery = run_battery(PanelView(sp.panel, sp.attributes.front()));
  const std::vector<std::string> order = {"text_mean", "text_variance", "rater_mean",
                                          "rater_variance", "run_bias", "run_stability",
                                          "run_trend", "residual_variance"};
  REQUIRE(battery.size() == order.size());
  for (std::size_t k = 0; k < order.size(); ++k) CHECK(battery[k].test_name == order[k]);
  CHECK(battery[0].p_value < 1e-6);
  CHECK(battery[2].reject);
  CHECK(!battery[4].reject);
}

TEST_CASE("planted run shift is caught by the run-bias test") {
  SyntheticParams p;
  p.beta.values = {0.0, 0.5, 0.5};
  p.seed = 8;
  const auto sp = generate_synthetic_panel(p);
  const PanelView v(sp.panel, sp.attributes.front());
  const auto r = test_run_bias(v);
  CHECK(r.reject);
  CHECK(r.statistic > 0);
  CHECK(r.df1 == 9 * 40 - 1);
}

TEST_CASE("entropy bounds") {
  const std::vector<double> uniform = {1, 2, 3, 4, 5};
  CHECK(label_entropy(uniform) == doctest::Approx(std::log2(5.0)).epsilon(1e-12));
  CHECK(std::fabs(max_label_entropy() - 2.321928094887362) < 1e-9);
  const std::vector<double> constant(10, 4.0);
  CHECK(label_entropy(constant) == 0.0);
  const std::vector<double> rounded = {0.2, 1.4, 5.6, 4.6};  // -> 1, 1, 5, 5
  CHECK(label_entropy(rounded) == doctest::Approx(1.0));
}

TEST_CASE("skewness") {
  const std::vector<double> x = {1, 2, 2, 3, 5, 5, 5, 4, 1, 1};
  const double n = x.size();
  const double m = mean(x);
  double m2 = 0, m3 = 0;
  for (double v : x) {
    m2 += std::pow(v - m, 2) / n;
    m3 += std::pow(v - m, 3) / n;
  }
  const double g1 = m3 / std::pow(m2, 1.5);
  const double want = g1 * std::sqrt(n * (n - 1)) / (n - 2);
  REQUIRE(adjusted_skewness(x).has_value());
  CHECK(*adjusted_skewness(x) == doctest::Approx(want).epsilon(1e-12));
  const std::vector<double> flat(6, 3.0);
  CHECK(!adjusted_skewness(flat).has_value());
  const std::vector<double> two = {1, 2};
  CHECK(!adjusted_skewness(two).has_value());
}

TEST_CASE("evaluator metrics on a noise-free panel") {
  SyntheticParams p;
  p.noise_sd = 0.0;
  p.n_e = 3;
  p.n_j = 3;
  p.n_t = 5;
  p.n_a = 2;
  p.alpha.values = {0.5, 0.0, -0.5};
  p.beta.values = {-0.2, 0.0, 0.2};
  p.gamma.values = {-1, -0.5, 0, 0.5, 1};
  const auto sp = generate_synthetic_panel(p);
  const auto m = evaluator_metrics(sp.panel);
  REQUIRE(m.size() == 3);
  CHECK(m[0].bias == doctest::Approx(0.5));
  CHECK(m[1].bias == doctest::Approx(0.0));
  for (const auto& e : m) {
    CHECK(e.stability == doctest::Approx(0.04));
    CHECK(e.precision == doctest::Approx(0.0));
    CHECK(e.entropy >= 0.0);
    CHECK(e.entropy <= max_label_entropy() + 1e-12);
  }
  ScorePanel constant;
  for (int i = 0; i < 2; ++i)
    for (int j = 1; j <= 2; ++j)
      for (int t = 0; t < 3; ++t)
        constant.add({"e" + std::to_string(i), j, "t" + std::to_string(t), "Readability", 4});
  const auto c = evaluator_metrics(constant);
  CHECK(c[0].skewness_undefined);
  CHECK(c[0].skewness == 0.0);
}

TEST_CASE("competition ranking") {
  const std::vector<double> v = {0.005, 0.003, 0.005, 0.011, 0.003};
  CHECK(competition_ranks(v) == std::vector<int>{3, 1, 3, 5, 1});
  CHECK(competition_ranks(v, false) == std::vector<int>{2, 4, 2, 1, 4});
}

TEST_CASE("ranking is invariant to order and monotone rescaling") {
  const auto metrics = load_metrics_csv(kFixtures / "evaluator_metrics_reference.csv");
  const auto base = rank_models(metrics);
  auto shuffled = metrics;
  std::mt19937 rng(5);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  auto scaled = metrics;
  for (auto& m : scaled) {
    m.bias *= 3;
    m.stability = m.stability * 10 + 1;
    m.precision = std::sqrt(m.precision);
    m.skewness = -m.skewness;
    m.entropy = m.entropy / 2;
  }
  for (const auto& other : {rank_models(shuffled), rank_models(scaled)}) {
    REQUIRE(other.size() == base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
      CHECK(other[k].evaluator == base[k].evaluator);
      CHECK(other[k].ranks == base[k].ranks);
      CHECK(other[k].total == base[k].total);
    }
  }
}

TEST_CASE("metrics CSV ingest checks bounds") {
  const auto path = std::filesystem::temp_directory_path() / "weave_metrics.csv";
  std::ofstream(path) << "evaluator,bias,stability,precision,skewness,entropy\nm,0.1,0.1,0.1,0.1,2.4\n";
  CHECK_THROWS_AS(load_metrics_csv(path), SchemaError);
  std::ofstream(path) << "evaluator,bias,stability,precision,skewness,entropy\nm,-0.1,0.1,0.1,0.1,2\n";
  CHECK_THROWS_AS(load_metrics_csv(path), SchemaError);
  const auto ref = load_metrics_csv(kFixtures / "evaluator_metrics_reference.csv");
  CHECK(ref.size() == 9);
  for (const auto& m : ref) CHECK(m.entropy <= max_label_entropy());
}

TEST_CASE("cost frontier matches a sweep oracle") {
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> u(0.01, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<CostPoint> pts;
    const int n = 1 + rng() % 15;
    for (int k = 0; k < n; ++k) pts.push_back({"m" + std::to_string(k), u(rng), u(rng)});
    auto sorted = pts;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.cost < b.cost; });
    std::vector<std::string> want;
    double best = -1;
    for (const auto& p : sorted)
      if (p.score > best) {
        want.push_back(p.evaluator);
        best = p.score;
      }
    CHECK(cost_frontier(pts) == want);
  }
  const std::vector<CostPoint> tied = {{"a", 1, 2}, {"b", 1, 2}, {"c", 2, 2}, {"d", 3, 5}};
  CHECK(cost_frontier(tied) == std::vector<std::string>{"a", "b", "d"});
  const std::vector<CostPoint> free = {{"a", 0, 2}};
  CHECK_THROWS_AS(cost_frontier(free), PrecondError);
}

TEST_CASE("synthetic panels are deterministic") {
  const auto a = generate_synthetic_panel(null_params(42));
  const auto b = generate_synthetic_panel(null_params(42));
  const auto c = generate_synthetic_panel(null_params(43));
  CHECK(a.panel == b.panel);
  CHECK(!(a.panel == c.panel));
  CHECK(a.panel.size() == 9 * 3 * 40);
  auto labels = null_params(1);
  labels.label_scale = true;
  for (const auto& o : generate_synthetic_panel(labels).panel.observations()) {
    CHECK(o.score == std::round(o.score));
    CHECK(o.score >= 1);
    CHECK(o.score <= 5);
  }
}

TEST_CASE("parallel calibration equals the serial reference") {
  const auto par = calibrate(null_params(0), 40, 1000);
  const auto ser = reference::calibrate(null_params(0), 40, 1000);
  CHECK(par == ser);
  CHECK(par.simulations == 40);
  CHECK(par.trials.at("text_mean") == 40);
}
