#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "skewdrift/experiments.hpp"

using namespace skewdrift;
using nlohmann::json;

namespace {

ExperimentResult run(ExperimentName name, json overrides, std::uint64_t seed = 1, unsigned threads = 1) {
  return run_experiment({name, std::move(overrides)}, seed, threads);
}

std::string joined(const std::vector<std::string>& header) {
  std::string s;
  for (const auto& h : header) s += (s.empty() ? "" : ",") + h;
  return s;
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("skewdrift_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST(Experiments, NamesRoundTrip) {
  EXPECT_EQ(experiment_names().size(), 6u);
  for (const auto& n : experiment_names()) EXPECT_EQ(experiment_name(experiment_from_name(n)), n);
  EXPECT_THROW(experiment_from_name("bogus"), InvalidArgument);
}

TEST(Experiments, MultVolTableSchema) {
  const auto r = run(ExperimentName::MultVolWeakError,
                     {{"x0_list", {10.0}}, {"a_list", {0.5}}, {"dt_grid", {0.1, 0.05}}, {"n_samples", 200}});
  ASSERT_EQ(r.tables.size(), 1u);
  const auto& t = r.tables[0];
  EXPECT_EQ(t.file_name, "weak_error.csv");
  EXPECT_EQ(joined(t.header),
            "experiment,model,scheme,param_a,x0,dt,n_samples,estimate,exact,abs_error,std_error,n_exploded");
  EXPECT_EQ(t.rows.size(), 6u);
  EXPECT_EQ(t.rows[0][0], "mult_vol_weak_error");
  EXPECT_EQ(t.rows[0][3], "0.5");
  EXPECT_EQ(t.rows[0][8], "0.0673794699909");
}

TEST(Experiments, OuReportsSlopes) {
  const auto r = run(ExperimentName::OuWeakOrder, {{"n_samples", 2000}, {"schemes", {"em"}}});
  EXPECT_EQ(r.tables[0].rows.size(), 4u);
  EXPECT_EQ(r.tables[0].rows[0][3], "");
  EXPECT_TRUE(r.details["slopes"].contains("em"));
}

TEST(Experiments, QuarticMomentsSchema) {
  const auto r = run(ExperimentName::QuarticMoments,
                     {{"dt_grid", {0.2, 0.1}}, {"n_kept", 5000}, {"burn_in", 100}, {"n_replicates", 2}});
  EXPECT_EQ(joined(r.tables[0].header), "model,scheme,dt,moment_order,estimate,target,abs_bias,std_error");
  EXPECT_EQ(r.tables[0].rows.size(), 6u);
  EXPECT_TRUE(r.details["bias_ratios"].contains("2"));
}

TEST(Experiments, PoissonMseSchema) {
  const auto r = run(ExperimentName::PoissonMse, {{"dt_grid", {0.001, 0.05}},
                                                  {"n_replicates", 3},
                                                  {"burn_in", 10},
                                                  {"n_kept", 200},
                                                  {"I", 5},
                                                  {"schemes", {"skew", "em"}}});
  EXPECT_EQ(joined(r.tables[0].header), "model,scheme,dt,n_replicates,mse,n_excluded");
  EXPECT_EQ(r.tables[0].rows.size(), 4u);
  EXPECT_EQ(r.tables[0].rows[0][3], "3");
}

TEST(Experiments, PoissonPaperExactForcesHundredReplicates) {
  const auto r = run(ExperimentName::PoissonMse, {{"dt_grid", {0.001}}, {"paper_exact", true}, {"burn_in", 0},
                                                  {"n_kept", 5}, {"I", 2}, {"schemes", {"skew"}}});
  EXPECT_EQ(r.tables[0].rows[0][3], "100");
}

TEST(Experiments, SoftSpheresSchemaAndValidation) {
  const auto r = run(ExperimentName::SoftSpheresGrid,
                     {{"B_grid", {1.0}}, {"dt_grid", {0.5, 1.0}}, {"n_reps", 5}, {"N", 10}});
  EXPECT_EQ(joined(r.tables[0].header), "model,scheme,B,dt,n_reps,n_steps,explosion_frequency");
  EXPECT_EQ(r.tables[0].rows.size(), 6u);
  EXPECT_THROW(run(ExperimentName::SoftSpheresGrid, {{"n_reps", 0}}), InvalidArgument);
}

TEST(Experiments, MeanIncrementSchema) {
  const auto r = run(ExperimentName::MeanIncrementCheck,
                     {{"dt_grid", {0.01}}, {"mu_over_sigma_grid", {0.0, 1.0}}, {"n_steps", 20000}});
  EXPECT_EQ(joined(r.tables[0].header), "dt,mu_over_sigma,closed_form,mc_mean,mc_se,z");
  EXPECT_EQ(r.tables[0].rows.size(), 2u);
  EXPECT_EQ(r.tables[0].rows[1][2], "0.0099223735114");
}

TEST(Experiments, OverridesAreStrict) {
  EXPECT_THROW(run(ExperimentName::QuarticMoments, {{"scheem", "skew"}}), InvalidArgument);
  EXPECT_THROW(run(ExperimentName::QuarticMoments, {{"dt_grid", "fast"}}), InvalidArgument);
  EXPECT_THROW(run(ExperimentName::QuarticMoments, {{"dt_grid", json::array()}}), InvalidArgument);
  EXPECT_THROW(run(ExperimentName::QuarticMoments, {{"n_kept", 2.5}}), InvalidArgument);
  EXPECT_THROW(run(ExperimentName::QuarticMoments, {{"scheme", "rk4"}, {"n_kept", 10}}), InvalidArgument);
}

TEST(Experiments, CellErrorsNameTheCell) {
  try {
    // A singular volatility (x0 = 0 under multiplicative noise) breaks the skew scheme.
    run(ExperimentName::MultVolWeakError, {{"x0_list", {0.0}}, {"a_list", {0.5}}, {"dt_grid", {0.1}},
                                           {"n_samples", 10}, {"schemes", {"skew"}}});
    FAIL();
  } catch (const CellError& e) {
    EXPECT_NE(std::string(e.what()).find("scheme=skew"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("x0=0"), std::string::npos);
  }
}

TEST(Experiments, HashIsReproducibleAndThreadIndependent) {
  const json o{{"dt_grid", {0.2, 0.1}}, {"n_kept", 3000}, {"burn_in", 10}, {"n_replicates", 4}};
  const auto a = run(ExperimentName::QuarticMoments, o, 5, 1);
  const auto b = run(ExperimentName::QuarticMoments, o, 5, 8);
  const auto c = run(ExperimentName::QuarticMoments, o, 6, 1);
  EXPECT_EQ(reproducibility_hash(a.tables), reproducibility_hash(b.tables));
  EXPECT_NE(reproducibility_hash(a.tables), reproducibility_hash(c.tables));
  EXPECT_EQ(reproducibility_hash(a.tables).size(), 64u);
}

TEST(Experiments, Sha256OfKnownInput) {
  // Reference digest from Python hashlib.
  const CsvTable t{"t.csv", {"a"}, {}};
  EXPECT_EQ(reproducibility_hash({t}), "0931c44e73e9d716c01c3f753983a795f66cbbfb03ffd9ac2fc2a6eb49263599");
}

TEST(Experiments, WriteTablesRefusesToOverwrite) {
  const auto dir = fresh_dir("write");
  const CsvTable t{"x.csv", {"a", "b"}, {{"1", "2"}}};
  write_tables({t}, dir, false);
  std::ifstream in(dir / "x.csv");
  std::string content((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(content, "a,b\n1,2\n");
  EXPECT_THROW(write_tables({t}, dir, false), ConfigError);
  EXPECT_NO_THROW(write_tables({t}, dir, true));
}

TEST(MeanIncrement, ClosedFormFrozenAndAsymptote) {
  EXPECT_NEAR(skew_normal_mean_increment(0.01, 1.0, 1.0), 0.00992237351139662, 1e-16);
  EXPECT_EQ(skew_normal_mean_increment(0.1, 0.0, 1.0), 0.0);
  const double dt = 0.01;
  EXPECT_NEAR(skew_normal_mean_increment(dt, 1e8, 1.0), std::sqrt(dt) * std::sqrt(2.0 / std::numbers::pi), 1e-12);
}

TEST(FormatNumber, Spelling) {
  EXPECT_EQ(format_number(0.1), "0.1");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
}
