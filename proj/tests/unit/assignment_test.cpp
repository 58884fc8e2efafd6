#include <gtest/gtest.h>

#include <algorithm>

#include "saod/assignment.hpp"
#include "saod/random.hpp"
#include "support/oracles.hpp"

namespace saod {
namespace {

Annotation gt_box(AnnotationId id, double x, double y, double w, double h, CategoryId cat = 1) {
  return Annotation{id, 1, cat, BoxXywh{x, y, w, h}};
}

TEST(AssignProposals, OverlappingConfidentProposalIsLabeled) {
  // [0,0,10,10] vs [0,0,10,6]: IoU 0.6
  const std::vector<Annotation> gt{gt_box(7, 0, 0, 10, 10)};
  const std::vector<ScoredProposal> props{{{0, 0, 10, 6}, 0.9}};
  EXPECT_DOUBLE_EQ(oracle::overlap(props[0].box, gt[0].bbox.corners()), 0.6);
  const auto p = assign_proposals(props, gt, Thresholds{}, true);
  ASSERT_EQ(p.labeled.size(), 1u);
  EXPECT_EQ(p.labeled[0].proposal, 0u);
  EXPECT_EQ(p.labeled[0].annotation_id, 7);
  EXPECT_TRUE(p.unlabeled.empty());
}

TEST(AssignProposals, DisjointConfidentProposalIsUnlabeled) {
  const std::vector<Annotation> gt{gt_box(1, 0, 0, 10, 10)};
  const std::vector<ScoredProposal> props{{{50, 50, 60, 60}, 0.9}};
  const auto p = assign_proposals(props, gt, Thresholds{}, true);
  EXPECT_EQ(p.unlabeled, std::vector<std::size_t>{0});
  const auto baseline = assign_proposals(props, gt, Thresholds{}, false);
  EXPECT_TRUE(baseline.unlabeled.empty());
  EXPECT_EQ(baseline.background, std::vector<std::size_t>{0});
}

TEST(AssignProposals, LowObjectnessIsBackground) {
  const std::vector<Annotation> gt{gt_box(1, 0, 0, 10, 10)};
  const std::vector<ScoredProposal> props{{{50, 50, 60, 60}, 0.3}};
  EXPECT_EQ(assign_proposals(props, gt, Thresholds{}, true).background, std::vector<std::size_t>{0});
}

TEST(AssignProposals, EmptyGtMakesConfidentProposalsUnlabeled) {
  const std::vector<ScoredProposal> props{{{5, 5, 9, 9}, 0.85}, {{1, 1, 3, 3}, 0.6}};
  const auto p = assign_proposals(props, {}, Thresholds{}, true);
  EXPECT_EQ(p.unlabeled, std::vector<std::size_t>{0});
  EXPECT_EQ(p.background, std::vector<std::size_t>{1});
}

TEST(AssignProposals, TiesGoToLowestAnnotationId) {
  const std::vector<Annotation> gt{gt_box(9, 0, 0, 10, 10), gt_box(4, 0, 0, 10, 10)};
  const std::vector<ScoredProposal> props{{{0, 0, 10, 10}, 0.99}};
  EXPECT_EQ(assign_proposals(props, gt, Thresholds{}, false).labeled.at(0).annotation_id, 4);
}

TEST(AssignProposals, BoundaryConventions) {
  const std::vector<Annotation> gt{gt_box(1, 0, 0, 10, 10)};
  Thresholds t;
  t.tau_fg = 0.6;
  // M exactly tau_fg is foreground; objectness exactly tau_obj is not
  const std::vector<ScoredProposal> props{{{0, 0, 10, 6}, 0.9}, {{0, 0, 10, 6}, 0.5}, {{50, 50, 60, 60}, 0.8}};
  const auto p = assign_proposals(props, gt, t, true);
  ASSERT_EQ(p.labeled.size(), 1u);
  EXPECT_EQ(p.labeled[0].proposal, 0u);
  EXPECT_EQ(p.background, (std::vector<std::size_t>{1, 2}));
}

TEST(AssignProposals, GrayZoneIgnorePolicy) {
  const std::vector<Annotation> gt{gt_box(1, 0, 0, 10, 10)};
  const std::vector<ScoredProposal> props{{{0, 0, 10, 3}, 0.9}};  // IoU 0.3
  EXPECT_EQ(assign_proposals(props, gt, Thresholds{}, true).background, std::vector<std::size_t>{0});
  const auto p = assign_proposals(props, gt, Thresholds{}, true, GrayZonePolicy::ignore);
  EXPECT_EQ(p.ignored, std::vector<std::size_t>{0});
  EXPECT_TRUE(p.background.empty());
}

TEST(AssignProposals, RejectsInvalidInput) {
  const std::vector<ScoredProposal> props{{{0, 0, 1, 1}, 0.5}};
  Thresholds bad;
  bad.tau_bg = 0.5;
  bad.tau_fg = 0.4;
  EXPECT_THROW(assign_proposals(props, {}, bad, true), DomainError);
  bad = Thresholds{};
  bad.tau_ppm = 0.3;
  EXPECT_THROW(assign_proposals(props, {}, bad, true), DomainError);
  bad = Thresholds{};
  bad.tau_fg = 1.0;
  EXPECT_THROW(assign_proposals(props, {}, bad, true), DomainError);
  const std::vector<ScoredProposal> bad_obj{{{0, 0, 1, 1}, 1.2}};
  EXPECT_THROW(assign_proposals(bad_obj, {}, Thresholds{}, true), DomainError);
  const std::vector<Annotation> bad_gt{gt_box(1, 0, 0, 0, 4)};
  EXPECT_THROW(assign_proposals(props, bad_gt, Thresholds{}, true), DomainError);
}

std::vector<Thresholds> threshold_settings() {
  return {Thresholds{}, Thresholds{0.5, 0.3, 0.6, 0.9}, Thresholds{0.7, 0.1, 0.3, 0.5},
          Thresholds{0.3, 0.3, 0.4, 0.4}, Thresholds{0.5, 0.05, 0.2, 0.95}};
}

struct Instance {
  std::vector<ScoredProposal> proposals;
  std::vector<Annotation> gt;
};

Instance random_instance(RandomStream& rng) {
  Instance inst;
  const auto n_gt = rng.uniform_int(0, 3);
  for (std::int64_t g = 0; g < n_gt; ++g)
    inst.gt.push_back(gt_box(rng.uniform_int(1, 6), static_cast<double>(rng.uniform_int(0, 20)),
                             static_cast<double>(rng.uniform_int(0, 20)), static_cast<double>(rng.uniform_int(2, 12)),
                             static_cast<double>(rng.uniform_int(2, 12))));
  const auto n_p = rng.uniform_int(0, 8);
  for (std::int64_t i = 0; i < n_p; ++i) {
    Box b;
    if (!inst.gt.empty() && rng.bernoulli(0.4)) {
      b = inst.gt[static_cast<std::size_t>(rng.uniform_int(0, n_gt - 1))].bbox.corners();
      b.x2 += static_cast<double>(rng.uniform_int(0, 3));
    } else {
      const auto x = static_cast<double>(rng.uniform_int(0, 25)), y = static_cast<double>(rng.uniform_int(0, 25));
      b = Box{x, y, x + static_cast<double>(rng.uniform_int(1, 10)), y + static_cast<double>(rng.uniform_int(1, 10))};
    }
    inst.proposals.push_back({b, static_cast<double>(rng.uniform_int(0, 20)) / 20.0});
  }
  return inst;
}

TEST(AssignProposals, MatchesRuleOracle) {
  RandomStream rng(31, "assign-oracle");
  for (int trial = 0; trial < 2000; ++trial) {
    const auto inst = random_instance(rng);
    for (const auto& t : threshold_settings()) {
      for (bool active : {false, true}) {
        const auto part = assign_proposals(inst.proposals, inst.gt, t, active);
        const auto rules = oracle::assignment_rules(inst.proposals, inst.gt, t, active);
        std::vector<oracle::Group> got(inst.proposals.size(), oracle::Group::background);
        std::vector<std::optional<AnnotationId>> match(inst.proposals.size());
        for (const auto& m : part.labeled) {
          got[m.proposal] = oracle::Group::labeled;
          match[m.proposal] = m.annotation_id;
        }
        for (std::size_t i : part.unlabeled) got[i] = oracle::Group::unlabeled;
        for (std::size_t i = 0; i < rules.size(); ++i) {
          ASSERT_EQ(got[i], rules[i].group) << "trial " << trial << " proposal " << i;
          ASSERT_EQ(match[i], rules[i].match) << "trial " << trial << " proposal " << i;
        }
      }
    }
  }
}

TEST(AssignProposals, PartitionIsExhaustiveAndDisjoint) {
  RandomStream rng(32, "assign-partition");
  for (int trial = 0; trial < 2000; ++trial) {
    const auto inst = random_instance(rng);
    for (auto gray : {GrayZonePolicy::background, GrayZonePolicy::ignore}) {
      const auto p = assign_proposals(inst.proposals, inst.gt, Thresholds{}, true, gray);
      std::vector<int> seen(inst.proposals.size(), 0);
      for (const auto& m : p.labeled) ++seen[m.proposal];
      for (std::size_t i : p.unlabeled) ++seen[i];
      for (std::size_t i : p.background) ++seen[i];
      for (std::size_t i : p.ignored) ++seen[i];
      EXPECT_TRUE(std::all_of(seen.begin(), seen.end(), [](int s) { return s == 1; }));
    }
  }
}

TEST(AssignProposals, RaisingTauPpmNeverAddsUnlabeled) {
  RandomStream rng(33, "assign-monotone");
  for (int trial = 0; trial < 2000; ++trial) {
    const auto inst = random_instance(rng);
    Thresholds lo, hi;
    lo.tau_ppm = rng.uniform(0.5, 0.99);
    hi.tau_ppm = rng.uniform(lo.tau_ppm, 0.99);
    const auto a = assign_proposals(inst.proposals, inst.gt, lo, true).unlabeled;
    const auto b = assign_proposals(inst.proposals, inst.gt, hi, true).unlabeled;
    EXPECT_TRUE(std::includes(a.begin(), a.end(), b.begin(), b.end()));
  }
}

TEST(AssignProposals, MissingAnnotationIsShieldedFromBackground) {
  RandomStream rng(34, "assign-recovery");
  for (int trial = 0; trial < 500; ++trial) {
    // kept gt on the left half, the removed one on the right, never touching
    std::vector<Annotation> kept;
    for (int g = 0; g < 3; ++g)
      kept.push_back(gt_box(g + 1, rng.uniform(0, 30), rng.uniform(0, 30), rng.uniform(2, 15), rng.uniform(2, 15)));
    const Box removed{rng.uniform(60, 80), rng.uniform(0, 40), 0, 0};
    const Box missing{removed.x1, removed.y1, removed.x1 + rng.uniform(2, 15), removed.y1 + rng.uniform(2, 15)};
    const std::vector<ScoredProposal> props{{missing, rng.uniform(0.81, 1.0)}};
    const auto p = assign_proposals(props, kept, Thresholds{}, true);
    EXPECT_EQ(p.unlabeled, std::vector<std::size_t>{0});
    EXPECT_TRUE(assign_proposals(props, kept, Thresholds{}, false).unlabeled.empty());
  }
}

TEST(DedupeUnlabeled, EmptySet) {
  const std::vector<ScoredProposal> props{{{0, 0, 5, 5}, 0.2}};
  EXPECT_TRUE(dedupe_unlabeled(props, assign_proposals(props, {}, Thresholds{}, true), 0.5).empty());
}

TEST(DedupeUnlabeled, NearDuplicatesCollapse) {
  const std::vector<ScoredProposal> props{{{0, 0, 10, 10}, 0.85}, {{0, 0, 10, 10.5}, 0.9}};
  const auto part = assign_proposals(props, {}, Thresholds{}, true);
  ASSERT_EQ(part.unlabeled.size(), 2u);
  const auto boxes = dedupe_unlabeled(props, part, 0.5);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0], props[1].box);
}

TEST(DedupeUnlabeled, DisjointBoxesSurvive) {
  const std::vector<ScoredProposal> props{{{0, 0, 5, 5}, 0.9}, {{10, 10, 15, 15}, 0.95}, {{20, 0, 25, 5}, 0.82}};
  const auto part = assign_proposals(props, {}, Thresholds{}, true);
  EXPECT_EQ(dedupe_unlabeled(props, part, 0.5).size(), 3u);
}

TEST(DedupeUnlabeled, IndexOutOfRange) {
  const std::vector<ScoredProposal> props{{{0, 0, 5, 5}, 0.9}};
  Partition part;
  part.unlabeled = {3};
  EXPECT_THROW(dedupe_unlabeled(props, part, 0.5), DomainError);
}

TEST(PpmGate, WarmupBoundary) {
  EXPECT_FALSE(ppm_gate({9000, 0}));
  EXPECT_FALSE(ppm_gate({9000, 8999}));
  EXPECT_TRUE(ppm_gate({9000, 9000}));
  EXPECT_TRUE(ppm_gate({30000, 30001}));
  EXPECT_TRUE(ppm_gate({0, 0}));
  EXPECT_TRUE(ppm_gate({0, 123456}));
}

}  // namespace
}  // namespace saod
