#include <gtest/gtest.h>

#include <map>

#include "saod/split.hpp"
#include "support/fixtures.hpp"

namespace saod {
namespace {

SplitSpec spec(SplitKind kind, double p, std::uint64_t seed = 1, std::optional<SplitLevel> level = std::nullopt) {
  return SplitSpec{kind, p, level, seed};
}

Dataset single_image(std::vector<CategoryId> cats) {
  Dataset d;
  std::set<CategoryId> seen(cats.begin(), cats.end());
  for (CategoryId c : seen) d.categories.push_back({c, "c" + std::to_string(c)});
  d.images.push_back({1, 200, 200, ""});
  AnnotationId id = 1;
  for (CategoryId c : cats) {
    const double x = static_cast<double>(id) * 10.0;
    d.annotations.push_back({id++, 1, c, {x, x, 5, 5}});
  }
  return d;
}

std::map<ImageId, std::size_t> per_image(const Dataset& d) {
  std::map<ImageId, std::size_t> n;
  for (const auto& img : d.images) n[img.id];
  for (const auto& a : d.annotations) ++n[a.image_id];
  return n;
}

std::map<std::pair<ImageId, CategoryId>, std::size_t> per_pair(const Dataset& d) {
  std::map<std::pair<ImageId, CategoryId>, std::size_t> n;
  for (const auto& a : d.annotations) ++n[{a.image_id, a.category_id}];
  return n;
}

void expect_manifest_partitions(const Dataset& original, const SplitResult& r) {
  std::set<AnnotationId> all;
  for (const auto& a : original.annotations) all.insert(a.id);
  std::set<AnnotationId> uni = r.manifest.kept_annotation_ids;
  for (AnnotationId id : r.manifest.removed_annotation_ids) {
    EXPECT_FALSE(r.manifest.kept_annotation_ids.contains(id));
    uni.insert(id);
  }
  EXPECT_EQ(uni, all);
  std::set<AnnotationId> in_output;
  for (const auto& a : r.dataset.annotations) in_output.insert(a.id);
  EXPECT_EQ(in_output, r.manifest.kept_annotation_ids);
  EXPECT_EQ(r.dataset.images, original.images);
  EXPECT_EQ(r.dataset.categories, original.categories);
}

TEST(GenerateSplit, Split1ZeroIsIdentity) {
  const Dataset d = fixtures::balanced(3, 7, 4);
  const auto r = generate_split(d, spec(SplitKind::split1, 0.0));
  EXPECT_EQ(r.dataset, d);
  EXPECT_TRUE(r.manifest.removed_annotation_ids.empty());
}

TEST(GenerateSplit, Split1HalfOfTenPerClass) {
  const Dataset d = fixtures::balanced(2, 10, 6);
  const auto r = generate_split(d, spec(SplitKind::split1, 0.5));
  std::map<CategoryId, std::size_t> removed;
  for (const auto& a : d.annotations)
    if (r.manifest.removed_annotation_ids.contains(a.id)) ++removed[a.category_id];
  EXPECT_EQ(removed, (std::map<CategoryId, std::size_t>{{1, 5}, {2, 5}}));
  EXPECT_EQ(r.manifest.per_class_counts.at(1), (ClassCounts{5, 5}));
  expect_manifest_partitions(d, r);
}

TEST(GenerateSplit, Split4ExtremeKeepsOne) {
  const Dataset d = single_image({1, 1, 2, 3});
  const auto r = generate_split(d, spec(SplitKind::split4, 0.0, 3, SplitLevel::extreme));
  EXPECT_EQ(r.dataset.annotations.size(), 1u);
}

TEST(GenerateSplit, Split4Levels) {
  const Dataset d = single_image({1, 1, 2, 3, 3});
  EXPECT_EQ(generate_split(d, spec(SplitKind::split4, 0.0, 3, SplitLevel::easy)).dataset.annotations.size(), 4u);
  EXPECT_EQ(generate_split(d, spec(SplitKind::split4, 0.0, 3, SplitLevel::hard)).dataset.annotations.size(), 3u);
  const Dataset one = single_image({2});
  EXPECT_EQ(generate_split(one, spec(SplitKind::split4, 0.0, 3, SplitLevel::easy)).dataset.annotations.size(), 1u);
}

TEST(GenerateSplit, SiodKeepsOnePerCategory) {
  const Dataset d = single_image({1, 1, 1, 2});
  const auto r = generate_split(d, spec(SplitKind::siod, 0.0));
  EXPECT_EQ(r.dataset.annotations.size(), 2u);
  EXPECT_EQ(per_pair(r.dataset), (std::map<std::pair<ImageId, CategoryId>, std::size_t>{{{1, 1}, 1}, {{1, 2}, 1}}));
}

TEST(GenerateSplit, Split2SingleCategoryBelowHalfRemovesNothing) {
  const Dataset d = single_image({4, 4, 4});
  EXPECT_EQ(generate_split(d, spec(SplitKind::split2, 0.4)).dataset.annotations.size(), 3u);
  EXPECT_EQ(generate_split(d, spec(SplitKind::split2, 0.5)).dataset.annotations.size(), 0u);
}

TEST(GenerateSplit, Split1MayEmptyImagesWithoutMarkingThemUnlabeled) {
  const Dataset d = single_image({1, 2});
  const auto r = generate_split(d, spec(SplitKind::split1, 1.0));
  EXPECT_TRUE(r.dataset.annotations.empty());
  EXPECT_TRUE(r.dataset.unlabeled_image_ids.empty());
}

TEST(GenerateSplit, RejectsBadSpec) {
  const Dataset d = single_image({1});
  EXPECT_THROW(generate_split(d, spec(SplitKind::split1, 1.5)), DomainError);
  EXPECT_THROW(generate_split(d, spec(SplitKind::split1, -0.1)), DomainError);
  EXPECT_THROW(generate_split(d, spec(SplitKind::split4, 0.0)), DomainError);
  EXPECT_THROW(generate_split(d, spec(SplitKind::split3, 0.5, 1, SplitLevel::hard)), DomainError);
}

TEST(GenerateSplit, EmptyImageViolatesPreconditionNamingIt) {
  Dataset d = single_image({1, 2});
  d.images.push_back({77, 10, 10, ""});
  for (SplitKind k : {SplitKind::split3, SplitKind::split5, SplitKind::siod}) {
    try {
      generate_split(d, spec(k, 0.5));
      FAIL() << "expected DomainError for " << to_string(k);
    } catch (const DomainError& e) {
      EXPECT_NE(std::string(e.what()).find("77"), std::string::npos);
    }
  }
  EXPECT_NO_THROW(generate_split(d, spec(SplitKind::split1, 0.5)));
  EXPECT_NO_THROW(generate_split(d, spec(SplitKind::split2, 0.5)));
  d.unlabeled_image_ids.insert(77);
  EXPECT_NO_THROW(generate_split(d, spec(SplitKind::split3, 0.5)));
}

std::size_t expected_removed_count(SplitKind kind, double p, std::optional<SplitLevel> level, std::size_t m) {
  switch (kind) {
    case SplitKind::split3: return std::min(round_half_up(p * static_cast<double>(m)), m - 1);
    case SplitKind::split4:
      if (*level == SplitLevel::easy) return m >= 2 ? 1 : 0;
      if (*level == SplitLevel::hard) return m / 2;
      return m - 1;
    default: return 0;
  }
}

TEST(GenerateSplit, PerKindCardinalityOnRandomDatasets) {
  RandomStream rng(404, "split-card");
  for (int trial = 0; trial < 300; ++trial) {
    const Dataset d = fixtures::random_dataset(rng, 6, 30, 4, true);
    const double p = std::round(rng.uniform() * 20.0) / 20.0;
    const auto seed = rng.next_u64();
    const auto before_img = per_image(d);
    const auto before_pair = per_pair(d);

    // split1: per-category count
    {
      const auto r = generate_split(d, spec(SplitKind::split1, p, seed));
      expect_manifest_partitions(d, r);
      std::map<CategoryId, std::size_t> n, removed;
      for (const auto& a : d.annotations) {
        ++n[a.category_id];
        removed[a.category_id] += r.manifest.removed_annotation_ids.contains(a.id);
      }
      for (const auto& [c, count] : n) EXPECT_EQ(removed[c], round_half_up(p * static_cast<double>(count)));
    }
    // split2: categories per image removed exhaustively
    {
      const auto r = generate_split(d, spec(SplitKind::split2, p, seed));
      expect_manifest_partitions(d, r);
      const auto after = per_pair(r.dataset);
      std::map<ImageId, std::size_t> k, gone;
      for (const auto& [key, count] : before_pair) {
        ++k[key.first];
        const auto it = after.find(key);
        if (it == after.end()) ++gone[key.first];
        else EXPECT_EQ(it->second, count);
      }
      for (const auto& [img, cats] : k) EXPECT_EQ(gone[img], round_half_up(p * static_cast<double>(cats)));
    }
    // split3 and split4: per-image counts
    for (auto [kind, level] : std::vector<std::pair<SplitKind, std::optional<SplitLevel>>>{
             {SplitKind::split3, std::nullopt},
             {SplitKind::split4, SplitLevel::easy},
             {SplitKind::split4, SplitLevel::hard},
             {SplitKind::split4, SplitLevel::extreme}}) {
      const auto r = generate_split(d, spec(kind, kind == SplitKind::split4 ? 0.0 : p, seed, level));
      expect_manifest_partitions(d, r);
      const auto after = per_image(r.dataset);
      for (const auto& [img, m] : before_img) {
        EXPECT_EQ(m - after.at(img), expected_removed_count(kind, p, level, m));
        EXPECT_GE(after.at(img), 1u);
      }
    }
    // split5: exhaustive-or-absent per (image, category), never empties an image, never over-removes
    {
      const auto r = generate_split(d, spec(SplitKind::split5, p, seed));
      expect_manifest_partitions(d, r);
      const auto after = per_pair(r.dataset);
      std::map<CategoryId, std::size_t> occ, gone;
      for (const auto& [key, count] : before_pair) {
        ++occ[key.second];
        const auto it = after.find(key);
        if (it == after.end()) ++gone[key.second];
        else EXPECT_EQ(it->second, count);
      }
      for (const auto& [c, n] : occ) EXPECT_LE(gone[c], round_half_up(p * static_cast<double>(n)));
      for (const auto& [img, m] : per_image(r.dataset)) EXPECT_GE(m, 1u);
    }
    // siod: one per (image, category)
    {
      const auto r = generate_split(d, spec(SplitKind::siod, 0.0, seed));
      expect_manifest_partitions(d, r);
      const auto after = per_pair(r.dataset);
      ASSERT_EQ(after.size(), before_pair.size());
      for (const auto& [key, count] : after) EXPECT_EQ(count, 1u);
    }
  }
}

TEST(GenerateSplit, Split5MeetsFractionWhenNoSkipsNeeded) {
  // category 1 is in every image next to a singleton category that rounds to
  // zero removals, so no image can be emptied and no mark is skipped
  Dataset d;
  d.categories = {{1, "shared"}};
  AnnotationId id = 1;
  for (ImageId i = 1; i <= 10; ++i) {
    d.categories.push_back({100 + i, "own" + std::to_string(i)});
    d.images.push_back({i, 100, 100, ""});
    d.annotations.push_back({id++, i, 1, {1, 1, 5, 5}});
    d.annotations.push_back({id++, i, 1, {20, 20, 5, 5}});
    d.annotations.push_back({id++, i, 100 + i, {10, 10, 5, 5}});
  }
  const auto r = generate_split(d, spec(SplitKind::split5, 0.3, 9));
  EXPECT_EQ(r.manifest.per_class_counts.at(1).removed, 6u);
  EXPECT_EQ(r.manifest.removed_annotation_ids.size(), 6u);
  for (const auto& [img, m] : per_image(r.dataset)) EXPECT_GE(m, 1u);
}

TEST(GenerateSplit, DeterministicAcrossRunsAndWorkers) {
  RandomStream rng(5, "split-det");
  for (int trial = 0; trial < 20; ++trial) {
    const Dataset d = fixtures::random_dataset(rng, 8, 40, 4, true);
    for (SplitKind k : {SplitKind::split1, SplitKind::split2, SplitKind::split3, SplitKind::split5, SplitKind::siod}) {
      const auto s = spec(k, 0.4, 1234);
      const auto base = generate_split(d, s, 1);
      const std::string bytes = dump_dataset(base.dataset) + dump_manifest(base.manifest);
      for (std::size_t workers : {1u, 2u, 4u, 8u}) {
        const auto again = generate_split(d, s, workers);
        EXPECT_EQ(dump_dataset(again.dataset) + dump_manifest(again.manifest), bytes);
      }
    }
  }
}

TEST(GenerateSplit, SeedSensitivity) {
  const Dataset d = fixtures::balanced(2, 10, 5);
  int differ = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto a = generate_split(d, spec(SplitKind::split1, 0.5, trial * 2 + 1));
    const auto b = generate_split(d, spec(SplitKind::split1, 0.5, trial * 2 + 2));
    differ += a.manifest.removed_annotation_ids != b.manifest.removed_annotation_ids;
  }
  EXPECT_GE(differ, 99);
}

TEST(GenerateSplit, PreservesAnnotationOrder) {
  RandomStream rng(8, "order");
  const Dataset d = fixtures::random_dataset(rng, 5, 30, 3, true);
  const auto r = generate_split(d, spec(SplitKind::split3, 0.5, 2));
  std::vector<AnnotationId> expected;
  for (const auto& a : d.annotations)
    if (r.manifest.kept_annotation_ids.contains(a.id)) expected.push_back(a.id);
  std::vector<AnnotationId> got;
  for (const auto& a : r.dataset.annotations) got.push_back(a.id);
  EXPECT_EQ(got, expected);
}

TEST(Manifest, JsonRoundTrip) {
  const Dataset d = fixtures::balanced(3, 5, 4);
  const auto r = generate_split(d, spec(SplitKind::split4, 0.0, 77, SplitLevel::hard));
  const auto j = manifest_to_json(r.manifest);
  EXPECT_EQ(j.at("spec").at("kind"), "split4");
  EXPECT_EQ(j.at("spec").at("level"), "hard");
  EXPECT_EQ(j.at("spec").at("seed"), 77u);
  EXPECT_TRUE(j.contains("kept_annotation_ids"));
  EXPECT_TRUE(j.contains("removed_annotation_ids"));
  EXPECT_TRUE(j.contains("per_class_counts"));
  EXPECT_EQ(manifest_from_json(nlohmann::json::parse(dump_manifest(r.manifest))), r.manifest);

  const auto r1 = generate_split(d, spec(SplitKind::split1, 0.2, 77));
  EXPECT_TRUE(manifest_to_json(r1.manifest).at("spec").at("level").is_null());
  EXPECT_EQ(manifest_from_json(manifest_to_json(r1.manifest)), r1.manifest);
}

TEST(SplitNames, RoundTrip) {
  for (SplitKind k : {SplitKind::split1, SplitKind::split2, SplitKind::split3, SplitKind::split4, SplitKind::split5,
                      SplitKind::siod})
    EXPECT_EQ(parse_split_kind(to_string(k)), k);
  for (SplitLevel l : {SplitLevel::easy, SplitLevel::hard, SplitLevel::extreme})
    EXPECT_EQ(parse_split_level(to_string(l)), l);
  EXPECT_THROW(parse_split_kind("split9"), DomainError);
  EXPECT_THROW(parse_split_level("medium"), DomainError);
}

TEST(RoundHalfUp, Cases) {
  EXPECT_EQ(round_half_up(0.0), 0u);
  EXPECT_EQ(round_half_up(0.5), 1u);
  EXPECT_EQ(round_half_up(1.49), 1u);
  EXPECT_EQ(round_half_up(2.5), 3u);
  EXPECT_EQ(round_half_up(0.35 * 10), 4u);
}

Dataset unlabeled_pool(std::size_t n, ImageId first) {
  Dataset u;
  for (std::size_t i = 0; i < n; ++i) u.images.push_back({first + static_cast<ImageId>(i), 30, 30, ""});
  return u;
}

TEST(MakeSslSaod, EmptyUnlabeledIsIdentity) {
  const Dataset d = fixtures::balanced(2, 4, 2);
  EXPECT_EQ(make_ssl_saod(d, Dataset{}), d);
}

TEST(MakeSslSaod, CountsImages) {
  const Dataset d = fixtures::balanced(2, 4, 2);
  const Dataset out = make_ssl_saod(d, unlabeled_pool(3, 100));
  EXPECT_EQ(out.images.size(), 5u);
  EXPECT_EQ(out.unlabeled_image_ids.size(), 3u);
  EXPECT_EQ(out.annotations, d.annotations);
  EXPECT_TRUE(validate_dataset(out).empty());
}

TEST(MakeSslSaod, RenumbersCollidingIds) {
  const Dataset d = fixtures::balanced(2, 4, 2);
  const Dataset out = make_ssl_saod(d, unlabeled_pool(3, 2));
  EXPECT_EQ(out.unlabeled_image_ids, (std::set<ImageId>{3, 4, 5}));
  EXPECT_TRUE(validate_dataset(out).empty());
}

TEST(MakeSslSaod, ConflictingCategoryNames) {
  const Dataset d = fixtures::balanced(2, 4, 2);
  Dataset u = unlabeled_pool(1, 50);
  u.categories.push_back({1, "not-c1"});
  try {
    make_ssl_saod(d, u);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("not-c1"), std::string::npos);
  }
  u.categories = {{1, "c1"}, {9, "extra"}};
  EXPECT_EQ(make_ssl_saod(d, u).categories.size(), 3u);
}

TEST(SplitStats, IdentityHasZeroFraction) {
  const Dataset d = fixtures::balanced(2, 10, 6);
  const auto r = split_stats(d, d);
  EXPECT_EQ(r.removed_fraction, 0.0);
  EXPECT_EQ(r.empty_images, 0u);
}

TEST(SplitStats, HalfSplit) {
  const Dataset d = fixtures::balanced(2, 10, 6);
  const auto r = split_stats(d, generate_split(d, spec(SplitKind::split1, 0.5)).dataset);
  EXPECT_DOUBLE_EQ(r.removed_fraction, 0.5);
  EXPECT_DOUBLE_EQ(r.per_class.at(1).removed_fraction, 0.5);
  EXPECT_EQ(r.kept_annotations, 10u);
}

TEST(SplitStats, FullyEmptied) {
  const Dataset d = fixtures::balanced(2, 10, 6);
  Dataset empty = d;
  empty.annotations.clear();
  const auto r = split_stats(d, empty);
  EXPECT_DOUBLE_EQ(r.removed_fraction, 1.0);
  EXPECT_EQ(r.empty_images, d.images.size());
  EXPECT_NE(format_sparsity_report(r).find("1"), std::string::npos);
  EXPECT_TRUE(sparsity_report_to_json(r).contains("per_class"));
}

TEST(SplitStats, CountsUnlabeledSeparately) {
  const Dataset d = fixtures::balanced(2, 4, 2);
  const Dataset ssl = make_ssl_saod(d, unlabeled_pool(3, 100));
  const auto r = split_stats(ssl, ssl);
  EXPECT_EQ(r.empty_images, 0u);
  EXPECT_EQ(r.unlabeled_images, 3u);
}

TEST(SplitStats, RejectsNonSubset) {
  const Dataset d = fixtures::balanced(2, 4, 2);
  Dataset other = d;
  other.annotations.push_back({999, 1, 1, {0, 0, 1, 1}});
  EXPECT_THROW(split_stats(d, other), DomainError);
}

}  // namespace
}  // namespace saod
