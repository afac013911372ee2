#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "robsel/harness.hpp"

using namespace robsel;

namespace {

ExperimentConfig fixed_config(const Matrix& mean, double var, std::int64_t budget, PolicyKind policy) {
  ExperimentConfig c;
  c.k = static_cast<std::size_t>(mean.rows());
  c.m = static_cast<std::size_t>(mean.cols());
  c.total_budget = budget;
  c.warmup = 2;
  c.policy = policy;
  c.prior_mean = Matrix::Zero(mean.rows(), mean.cols());
  c.prior_var = Matrix::Constant(mean.rows(), mean.cols(), kUninformative);
  c.sampling_var = Matrix::Constant(mean.rows(), mean.cols(), var);
  c.mean_source = MeanSource::fixed;
  c.true_mean = mean;
  c.checkpoint_step = 20;
  c.threads = 1;
  c.validate();
  return c;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(Replication, WarmupOnlyBudget) {
  Matrix mu(2, 2);
  mu << 1.0, 2.0, 0.0, 3.0;
  const ExperimentConfig c = fixed_config(mu, 1.0, 8, PolicyKind::raoda);
  const ReplicationResult r = run_replication(c, 0);
  EXPECT_EQ(r.budgets, (std::vector<std::int64_t>{8}));
  EXPECT_EQ(r.selected.size(), 1u);
  EXPECT_TRUE((r.final_state.counts().array() == 2).all());
}

TEST(Replication, HugeGapAlwaysCorrect) {
  Matrix mu(2, 1);
  mu << 0.0, 10.0;
  for (PolicyKind p : kAllPolicies) {
    const ReplicationResult r = run_replication(fixed_config(mu, 1.0, 200, p), 3);
    EXPECT_EQ(r.true_best, 1u);
    for (unsigned char ok : r.correct) EXPECT_TRUE(ok);
    EXPECT_EQ(r.final_state.total_steps(), 200);
    EXPECT_EQ(r.final_state.counts().sum(), 200);
  }
}

TEST(Replication, DeterministicAndSharedSamplePaths) {
  Matrix mu(3, 2);
  mu << 1.0, 0.5, 0.2, 0.9, 0.0, 0.4;
  const ExperimentConfig c = fixed_config(mu, 2.0, 300, PolicyKind::raoda);
  const ReplicationResult a = run_replication(c, 5);
  const ReplicationResult b = run_replication(c, 5);
  EXPECT_TRUE(a.final_state == b.final_state);
  EXPECT_EQ(a.selected, b.selected);
  EXPECT_FALSE(run_replication(c, 6).final_state == a.final_state);

  // EA and RAODA read the same per-pair observation streams: after warmup
  // both have identical states.
  ExperimentConfig w = c;
  w.total_budget = w.warmup_budget();
  w.checkpoints.clear();
  const auto ra = run_replication(w, 5);
  w.policy = PolicyKind::ea;
  EXPECT_TRUE(run_replication(w, 5).final_state == ra.final_state);
}

TEST(Replication, DrawsMeansFromPrior) {
  ExperimentConfig c = preset("exp3");
  c.total_budget = c.warmup_budget() + 50;
  c.checkpoints.clear();
  const ReplicationResult a = run_replication(c, 0);
  const ReplicationResult b = run_replication(c, 1);
  EXPECT_NE(a.true_mean(0, 0), b.true_mean(0, 0));
  EXPECT_NO_THROW(check_unique_worst_case(a.true_mean));
  EXPECT_EQ(a.true_mean, run_replication(c, 0).true_mean);
}

TEST(Experiment, SingleCorrectReplication) {
  Matrix mu(2, 1);
  mu << 0.0, 10.0;
  ExperimentConfig c = fixed_config(mu, 1.0, 40, PolicyKind::ea);
  c.macro_reps = 1;
  const PcsCurve curve = run_experiment(c);
  for (const PcsRow& row : curve.rows) {
    EXPECT_EQ(row.pcs, 1.0);
    EXPECT_EQ(row.std_error, 0.0);
    EXPECT_EQ(row.reps, 1);
  }
}

TEST(Experiment, ParallelMatchesSerial) {
  ExperimentConfig c = preset("exp2");
  c.total_budget = c.warmup_budget() + 200;
  c.checkpoints.clear();
  c.checkpoint_step = 50;
  c.macro_reps = 24;
  c.policy = PolicyKind::raoda;
  c.threads = 1;
  const PcsCurve serial = run_experiment(c);
  c.threads = 4;
  const PcsCurve parallel = run_experiment(c);
  ASSERT_EQ(serial.rows.size(), parallel.rows.size());
  for (std::size_t j = 0; j < serial.rows.size(); ++j) {
    EXPECT_EQ(serial.rows[j].pcs, parallel.rows[j].pcs);
    EXPECT_EQ(serial.rows[j].budget, parallel.rows[j].budget);
    const double p = serial.rows[j].pcs;
    EXPECT_DOUBLE_EQ(serial.rows[j].std_error, std::sqrt(p * (1 - p) / 24.0));
  }
}

TEST(Experiment, PcsIsFractionOfCorrectReplications) {
  Matrix mu(3, 2);
  mu << 1.0, 0.5, 0.2, 0.9, 0.0, 0.4;
  ExperimentConfig c = fixed_config(mu, 4.0, 60, PolicyKind::raoda);
  c.macro_reps = 10;
  const PcsCurve curve = run_experiment(c);
  int hits = 0;
  for (std::uint64_t r = 0; r < 10; ++r) hits += run_replication(c, r).correct.back();
  EXPECT_EQ(curve.rows.back().pcs, hits / 10.0);
}

TEST(Experiment, EqualAllocationImprovesWithBudget) {
  Matrix mu(3, 2);
  mu << 1.0, 0.6, 0.2, 0.8, 0.0, 0.5;
  ExperimentConfig c = fixed_config(mu, 1.0, 1200, PolicyKind::ea);
  c.checkpoints = {12, 300, 1200};
  c.macro_reps = 400;
  const PcsCurve curve = run_experiment(c);
  for (std::size_t j = 1; j < curve.rows.size(); ++j) {
    const auto& lo = curve.rows[j - 1];
    const auto& hi = curve.rows[j];
    EXPECT_GE(hi.pcs, lo.pcs - 2.0 * std::hypot(lo.std_error, hi.std_error));
  }
  EXPECT_GT(curve.rows.back().pcs, curve.rows.front().pcs);
}

TEST(BoundEstimator, TwoAlternativeClosedForm) {
  PosteriorState s(Matrix::Zero(2, 1), Matrix::Constant(2, 1, kUninformative), Matrix::Constant(2, 1, 1.0));
  s.absorb({0, 0}, 2, 1.0);   // mean 0.5, var 0.5
  s.absorb({1, 0}, 4, -0.4);  // mean -0.1, var 0.25
  const Ranking r = compute_ranking(s);
  Stream rng(1, 2, 3);
  const McEstimate e = estimate_posterior_pcs_bound(s, r, 100000, rng);
  const double exact = normal_cdf(0.6 / std::sqrt(0.75));
  EXPECT_NEAR(e.estimate, exact, 3.0 * std::sqrt(exact * (1 - exact) / 1e5));
  EXPECT_EQ(e.draws, 100000);
}

TEST(BoundEstimator, OverwhelmingSeparation) {
  PosteriorState s(Matrix::Zero(3, 2), Matrix::Constant(3, 2, kUninformative), Matrix::Constant(3, 2, 1.0));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t d = 0; d < 2; ++d) s.absorb({i, d}, 100, 100.0 * (-30.0 * double(i) + double(d)));
  Stream rng(4);
  EXPECT_GE(estimate_posterior_pcs_bound(s, compute_ranking(s), 5000, rng).estimate, 0.999);
  EXPECT_THROW(estimate_posterior_pcs_bound(s, compute_ranking(s), 0, rng), PreconditionError);
}

TEST(BoundEstimator, BoundBelowDirectProbability) {
  std::mt19937_64 gen(41);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int rep = 0; rep < 20; ++rep) {
    PosteriorState s(Matrix::Zero(4, 3), Matrix::Constant(4, 3, 1.0), Matrix::Constant(4, 3, 2.0));
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t d = 0; d < 3; ++d) s.absorb({i, d}, 3, 3.0 * u(gen));
    Stream rng(9, static_cast<std::uint64_t>(rep), 0);
    const auto est = estimate_posterior_pcs(s, compute_ranking(s), 4000, rng);
    EXPECT_LE(est.bound.estimate, est.direct.estimate);
  }
}

TEST(Csv, FormatAndOrdering) {
  PcsCurve curve;
  curve.rows.push_back({6000, PolicyKind::raoda, 0.93, 0.0057, 2000});
  curve.rows.push_back({2000, PolicyKind::rocba, 0.5, 0.0111803398875, 2000});
  curve.rows.push_back({2000, PolicyKind::ea, 1.0 / 3.0, 0.01, 2000});
  std::ostringstream out;
  write_csv(curve, out);
  EXPECT_EQ(out.str(),
            "budget,policy,pcs,stderr,reps\n"
            "2000,ea,0.333333,0.01,2000\n"
            "2000,rocba,0.5,0.0111803,2000\n"
            "6000,raoda,0.93,0.0057,2000\n");
}

TEST(Csv, EmitIsByteStable) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string a = (dir / "robsel_csv_a.csv").string();
  const std::string b = (dir / "robsel_csv_b.csv").string();
  emit_csv(PcsCurve{}, a);
  EXPECT_EQ(read_file(a), "budget,policy,pcs,stderr,reps\n");
  PcsCurve curve;
  curve.rows.push_back({6000, PolicyKind::raoda, 0.93, 0.0057, 2000});
  emit_csv(curve, a);
  emit_csv(curve, b);
  EXPECT_EQ(read_file(a), read_file(b));
  EXPECT_EQ(read_file(a), "budget,policy,pcs,stderr,reps\n6000,raoda,0.93,0.0057,2000\n");
  std::remove(a.c_str());
  std::remove(b.c_str());
  try {
    emit_csv(curve, "/nonexistent-dir/out.csv");
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/out.csv"), std::string::npos);
  }
}
