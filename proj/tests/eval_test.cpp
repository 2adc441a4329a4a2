#include "mrfd/eval.hpp"

#include <gtest/gtest.h>

namespace mrfd {
namespace {

TEST(Pope, HandComputedConfusion) {
  const std::vector<PopeRecord> records{
      {Answer::yes, Answer::yes}, {Answer::yes, Answer::yes},
      {Answer::yes, Answer::no},  {Answer::no, Answer::yes},
      {Answer::no, Answer::no},
  };
  const PopeMetrics m = pope_metrics(records);
  EXPECT_EQ(m.tp, 2);
  EXPECT_EQ(m.fp, 1);
  EXPECT_EQ(m.fn, 1);
  EXPECT_EQ(m.tn, 1);
  EXPECT_NEAR(m.accuracy, 3.0 / 5.0, 1e-15);
  ASSERT_TRUE(m.precision && m.recall && m.f1);
  EXPECT_NEAR(*m.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(*m.recall, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(*m.f1, 2.0 / 3.0, 1e-15);
}

TEST(Pope, AllCorrectAndAllWrong) {
  const std::vector<PopeRecord> perfect{{Answer::yes, Answer::yes},
                                        {Answer::no, Answer::no}};
  const PopeMetrics p = pope_metrics(perfect);
  EXPECT_EQ(p.accuracy, 1.0);
  EXPECT_EQ(*p.precision, 1.0);
  EXPECT_EQ(*p.recall, 1.0);
  EXPECT_EQ(*p.f1, 1.0);

  const std::vector<PopeRecord> inverted{{Answer::no, Answer::yes},
                                         {Answer::yes, Answer::no}};
  const PopeMetrics q = pope_metrics(inverted);
  EXPECT_EQ(q.accuracy, 0.0);
  ASSERT_TRUE(q.precision && q.recall);
  EXPECT_EQ(*q.precision, 0.0);
  EXPECT_EQ(*q.recall, 0.0);
  EXPECT_FALSE(q.f1.has_value());
}

TEST(Pope, ZeroDenominatorsReportedAbsent) {
  // Never predicts yes and no yes labels: precision and recall undefined.
  const std::vector<PopeRecord> all_no{{Answer::no, Answer::no},
                                       {Answer::no, Answer::no}};
  const PopeMetrics m = pope_metrics(all_no);
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_FALSE(m.precision.has_value());
  EXPECT_FALSE(m.recall.has_value());
  EXPECT_FALSE(m.f1.has_value());

  // Predicts yes on negatives only: precision defined (0), recall undefined.
  const std::vector<PopeRecord> fp_only{{Answer::yes, Answer::no}};
  const PopeMetrics f = pope_metrics(fp_only);
  ASSERT_TRUE(f.precision.has_value());
  EXPECT_EQ(*f.precision, 0.0);
  EXPECT_FALSE(f.recall.has_value());
}

TEST(Pope, EmptyRejected) {
  EXPECT_THROW(pope_metrics(std::vector<PopeRecord>{}), DegenerateInput);
}

TEST(ExtractPrediction, FirstTokenDecides) {
  const std::vector<Token> yes{2};
  const std::vector<Token> no{3};
  EXPECT_EQ(extract_prediction(TokenSeq{2, 0}, yes, no), Answer::yes);
  EXPECT_EQ(extract_prediction(TokenSeq{3, 2, 0}, yes, no), Answer::no);
  EXPECT_FALSE(extract_prediction(TokenSeq{5, 2}, yes, no).has_value());
  EXPECT_FALSE(extract_prediction(TokenSeq{}, yes, no).has_value());
}

TEST(Chair, HandComputedRates) {
  // Caption 1 mentions {cat, dog} with truth {cat}: dog hallucinated.
  // Caption 2 mentions {table} with truth {table, chair}: clean.
  const std::vector<ChairRecord> records{
      {{"cat", "dog"}, {"cat"}},
      {{"table"}, {"table", "chair"}},
  };
  const ChairScores s = chair_scores(records);
  EXPECT_EQ(s.captions, 2);
  EXPECT_EQ(s.hallucinated_captions, 1);
  EXPECT_EQ(s.total_mentions, 3);
  EXPECT_EQ(s.hallucinated_mentions, 1);
  EXPECT_NEAR(s.chair_s, 0.5, 1e-15);
  ASSERT_TRUE(s.chair_i.has_value());
  EXPECT_NEAR(*s.chair_i, 1.0 / 3.0, 1e-15);
}

TEST(Chair, RepeatedMentionsCountEachTime) {
  const std::vector<ChairRecord> records{{{"dog", "dog", "cat"}, {"cat"}}};
  const ChairScores s = chair_scores(records);
  EXPECT_EQ(s.total_mentions, 3);
  EXPECT_EQ(s.hallucinated_mentions, 2);
  EXPECT_NEAR(*s.chair_i, 2.0 / 3.0, 1e-15);
}

TEST(Chair, NoMentionsMeansNoInstanceRate) {
  const std::vector<ChairRecord> records{{{}, {"cat"}}, {{}, {}}};
  const ChairScores s = chair_scores(records);
  EXPECT_EQ(s.chair_s, 0.0);
  EXPECT_FALSE(s.chair_i.has_value());
}

TEST(Chair, EmptyMentionNameRejected) {
  const std::vector<ChairRecord> records{{{""}, {"cat"}}};
  EXPECT_THROW(chair_scores(records), ContractViolation);
  EXPECT_THROW(chair_scores(std::vector<ChairRecord>{}), DegenerateInput);
}

TEST(JsdDensity, MassesNormalizedPerClass) {
  const std::vector<JsdSample> samples{
      {0.01, true}, {0.02, true}, {0.30, false}, {0.60, false}, {0.05, true}};
  const JsdDensityReport rep = jsd_density_report(samples, 0.1);
  EXPECT_EQ(rep.nbins, 7u);
  EXPECT_EQ(rep.correct.count, 3u);
  EXPECT_EQ(rep.hallucinated.count, 2u);
  double cm = 0.0, hm = 0.0;
  for (double m : rep.correct.masses) cm += m;
  for (double m : rep.hallucinated.masses) hm += m;
  EXPECT_NEAR(cm, 1.0, 1e-12);
  EXPECT_NEAR(hm, 1.0, 1e-12);
  EXPECT_NEAR(rep.correct.masses[0], 1.0, 1e-12);
  EXPECT_NEAR(rep.hallucinated.masses[2], 0.5, 1e-12);
  EXPECT_NEAR(rep.hallucinated.masses[5], 0.5, 1e-12);
}

TEST(JsdDensity, StatsByHand) {
  const std::vector<JsdSample> samples{{0.1, true}, {0.2, true}, {0.4, true},
                                       {0.3, false}};
  const JsdDensityReport rep = jsd_density_report(samples, 0.05);
  ASSERT_TRUE(rep.correct.mean && rep.correct.median && rep.correct.stddev);
  EXPECT_NEAR(*rep.correct.mean, 0.7 / 3.0, 1e-12);
  EXPECT_NEAR(*rep.correct.median, 0.2, 1e-12);
  // Population stddev of {0.1, 0.2, 0.4} around mean 7/30.
  const double mu = 0.7 / 3.0;
  const double var =
      ((0.1 - mu) * (0.1 - mu) + (0.2 - mu) * (0.2 - mu) +
       (0.4 - mu) * (0.4 - mu)) / 3.0;
  EXPECT_NEAR(*rep.correct.stddev, std::sqrt(var), 1e-12);
  EXPECT_NEAR(*rep.hallucinated.mean, 0.3, 1e-12);
  EXPECT_NEAR(*rep.hallucinated.stddev, 0.0, 1e-12);
}

TEST(JsdDensity, EvenCountMedianAveragesMiddlePair) {
  const std::vector<JsdSample> samples{
      {0.1, true}, {0.5, true}, {0.2, true}, {0.4, true}};
  const JsdDensityReport rep = jsd_density_report(samples, 0.1);
  EXPECT_NEAR(*rep.correct.median, 0.3, 1e-12);
}

TEST(JsdDensity, EmptyClassHasNoStats) {
  const std::vector<JsdSample> samples{{0.1, true}};
  const JsdDensityReport rep = jsd_density_report(samples, 0.1);
  EXPECT_EQ(rep.hallucinated.count, 0u);
  EXPECT_FALSE(rep.hallucinated.mean.has_value());
  EXPECT_FALSE(rep.hallucinated.median.has_value());
  EXPECT_FALSE(rep.hallucinated.stddev.has_value());
  EXPECT_EQ(rep.hallucinated.masses.size(), rep.nbins);
}

TEST(JsdDensity, UpperBoundLandsInLastBin) {
  const double ln2 = std::log(2.0);
  const std::vector<JsdSample> samples{{ln2, true}};
  const JsdDensityReport rep = jsd_density_report(samples, 0.1);
  EXPECT_NEAR(rep.correct.masses[rep.nbins - 1], 1.0, 1e-12);
}

TEST(JsdDensity, BadInputsRejected) {
  const std::vector<JsdSample> ok{{0.1, true}};
  EXPECT_THROW(jsd_density_report(std::vector<JsdSample>{}, 0.1),
               DegenerateInput);
  EXPECT_THROW(jsd_density_report(ok, 0.0), ContractViolation);
  EXPECT_THROW(jsd_density_report(ok, 1.0), ContractViolation);
  const std::vector<JsdSample> neg{{-0.1, true}};
  EXPECT_THROW(jsd_density_report(neg, 0.1), ContractViolation);
  const std::vector<JsdSample> high{{0.8, true}};
  EXPECT_THROW(jsd_density_report(high, 0.1), ContractViolation);
}

}  // namespace
}  // namespace mrfd
