#include "gesturelab/dataset.hpp"
#include "gesturelab/rng.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

using namespace gesturelab;
using namespace gesturelab::dataset;

namespace {

Vocabulary two_classes() { return Vocabulary({"Nodding", "Vibrato"}); }

FrameLabelMatrix random_matrix(Rng& rng, std::vector<std::string> classes, std::size_t frames, double p) {
  FrameLabelMatrix m("v", kDefaultFrameRate, frames, std::move(classes));
  for (std::size_t c = 0; c < m.class_count(); ++c) {
    for (std::size_t t = 0; t < frames; ++t) m.set(c, t, rng.uniform() < p);
  }
  return m;
}

ClipSet numbered_clips(std::size_t n, const std::string& video = "v") {
  ClipSet s;
  s.class_names = {"a"};
  for (std::size_t i = 0; i < n; ++i) {
    Clip c;
    c.video_id = video;
    c.start_frame = i * kClipFrames;
    c.class_count = 1;
    c.frame_labels.assign(kClipFrames, 0);
    c.binary_labels = {0};
    c.smoothed_labels = {0.0};
    s.clips.push_back(std::move(c));
  }
  return s;
}

std::set<std::pair<std::string, std::size_t>> keys(const ClipSet& s) {
  std::set<std::pair<std::string, std::size_t>> out;
  for (const auto& c : s.clips) out.emplace(c.video_id, c.start_frame);
  return out;
}

}  // namespace

TEST(ParseAnnotations, MapsFields) {
  const auto a = parse_annotations("Nodding\t1.20\t2.00\n");
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].label, "Nodding");
  EXPECT_DOUBLE_EQ(a[0].start, 1.20);
  EXPECT_DOUBLE_EQ(a[0].end, 2.00);
}

TEST(ParseAnnotations, SkipsBlankAndCommentLines) {
  const auto a = parse_annotations("Nodding\t1\t2\n\n# note\nVibrato\t3\t4\n");
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(a[1].label, "Vibrato");
}

TEST(ParseAnnotations, CustomColumns) {
  ColumnSpec spec{2, 0, 1};
  const auto a = parse_annotations("0.5\t0.9\tFreeze\n", spec);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].label, "Freeze");
  EXPECT_DOUBLE_EQ(a[0].start, 0.5);
}

TEST(ParseAnnotations, Errors) {
  EXPECT_ERROR_CATEGORY(parse_annotations("Vibrato\t5.0\t4.0\n"), validation);
  EXPECT_ERROR_CATEGORY(parse_annotations("Vibrato\tfive\t6.0\n"), parse);
  EXPECT_ERROR_CATEGORY(parse_annotations("Vibrato\t5.0\n"), config);
}

TEST(ParseAnnotations, ReportsEveryBadLine) {
  try {
    parse_annotations("A\tx\t1\nB\t1\t2\nC\t3\ty\n");
    FAIL();
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  }
}

TEST(Vocabulary, FoldsCaseAndWhitespace) {
  Vocabulary v(default_gesture_classes());
  EXPECT_EQ(v.size(), 17u);
  EXPECT_EQ(v.find("  eyes   CLOSED "), v.find("Eyes closed"));
  EXPECT_FALSE(v.find("Tapping"));
}

TEST(Rasterize, PartialOverlapActivatesBothFrames) {
  std::vector<GestureAnnotation> a{{"Nodding", 0.05, 0.10}};
  const auto r = rasterize_labels(a, two_classes(), 25.0, 5);
  EXPECT_FALSE(r.matrix.at(0, 0));
  EXPECT_TRUE(r.matrix.at(0, 1));
  EXPECT_TRUE(r.matrix.at(0, 2));
  EXPECT_FALSE(r.matrix.at(0, 3));
}

TEST(Rasterize, TouchingBoundaryIsNotOverlap) {
  std::vector<GestureAnnotation> a{{"Nodding", 0.04, 0.08}};
  const auto r = rasterize_labels(a, two_classes(), 25.0, 5);
  EXPECT_FALSE(r.matrix.at(0, 0));
  EXPECT_TRUE(r.matrix.at(0, 1));
  EXPECT_FALSE(r.matrix.at(0, 2));
}

TEST(Rasterize, FullCover) {
  std::vector<GestureAnnotation> a{{"vibrato", 0.0, 40 / 25.0}};
  const auto r = rasterize_labels(a, two_classes(), 25.0, 40);
  EXPECT_EQ(r.matrix.active_frames(1), 40u);
  EXPECT_EQ(r.matrix.active_frames(0), 0u);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(Rasterize, OverrunIsClippedWithWarning) {
  std::vector<GestureAnnotation> a{{"Nodding", 0.0, 10.0}};
  const auto r = rasterize_labels(a, two_classes(), 25.0, 10);
  EXPECT_EQ(r.matrix.active_frames(0), 10u);
  EXPECT_EQ(r.warnings.size(), 1u);
}

TEST(Rasterize, UnknownClassListsVocabulary) {
  std::vector<GestureAnnotation> a{{"Tapping", 0.0, 1.0}, {"Humming", 0.0, 1.0}};
  try {
    rasterize_labels(a, two_classes(), 25.0, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::validation);
    const std::string msg = e.what();
    for (const char* s : {"Tapping", "Humming", "Nodding", "Vibrato"}) EXPECT_NE(msg.find(s), std::string::npos) << msg;
  }
}

TEST(Rasterize, MatchesIntervalOracle) {
  // Frame t is on iff some interval overlaps [t/25, (t+1)/25) with positive length.
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<GestureAnnotation> anns;
    const int n = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) {
      const double s = std::round(rng.uniform(0.0, 3.0) * 100.0) / 100.0;
      const double e = s + 0.01 + std::round(rng.uniform(0.0, 1.0) * 100.0) / 100.0;
      anns.push_back({rng.uniform() < 0.5 ? "Nodding" : "Vibrato", s, e});
    }
    const std::size_t frames = 100;
    const auto r = rasterize_labels(anns, two_classes(), 25.0, frames);
    for (std::size_t c = 0; c < 2; ++c) {
      for (std::size_t t = 0; t < frames; ++t) {
        // integer arithmetic in hundredths of a second: frame t spans [4t, 4t+4)
        bool expect = false;
        for (const auto& a : anns) {
          if ((a.label == "Nodding") != (c == 0)) continue;
          const long s = std::lround(a.start * 100), e = std::lround(a.end * 100);
          expect = expect || (std::min<long>(e, 4 * (long)t + 4) - std::max<long>(s, 4 * (long)t) > 0);
        }
        ASSERT_EQ(r.matrix.at(c, t), expect) << "trial " << trial << " class " << c << " frame " << t;
      }
    }
  }
}

TEST(Rasterize, MonotoneUnderExtension) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const double s = rng.uniform(0.0, 2.0);
    const double e = s + rng.uniform(0.001, 1.0);
    std::vector<GestureAnnotation> a{{"Nodding", s, e}};
    std::vector<GestureAnnotation> b{{"Nodding", std::max(0.0, s - rng.uniform(0.0, 0.3)), e + rng.uniform(0.0, 0.3)}};
    const auto ra = rasterize_labels(a, two_classes(), 25.0, 100).matrix;
    const auto rb = rasterize_labels(b, two_classes(), 25.0, 100).matrix;
    for (std::size_t t = 0; t < 100; ++t) ASSERT_TRUE(!ra.at(0, t) || rb.at(0, t)) << t;
  }
}

TEST(NormalPlay, ComplementOfGestures) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = derive_normal_play(random_matrix(rng, {"a", "b", "c"}, 200, 0.2));
    ASSERT_EQ(m.class_names.back(), kNormalPlay);
    for (std::size_t t = 0; t < m.frame_count; ++t) {
      bool any = false;
      for (std::size_t c = 0; c + 1 < m.class_count(); ++c) any = any || m.at(c, t);
      ASSERT_TRUE(any != m.at(m.class_count() - 1, t));
    }
  }
}

TEST(NormalPlay, SilentVideo) {
  const auto m = derive_normal_play(FrameLabelMatrix("v", 25.0, 10, {"a", "b"}));
  EXPECT_EQ(m.active_frames(2), 10u);
  EXPECT_ERROR_CATEGORY(derive_normal_play(m), validation);
}

TEST(SuperClasses, DefaultMapIsTotalWithSevenNames) {
  const auto map = SuperClassMap::defaults();
  const std::vector<std::string> expected{"Facial Expression",  "Head related action", "Right Hand action",
                                          "Left hand action",   "Relative stillness",  "Upper body movement",
                                          "Normal play"};
  EXPECT_EQ(map.super_class_names(), expected);
  for (const auto& fine : default_gesture_classes()) EXPECT_TRUE(map.super_index_of(fine)) << fine;
  EXPECT_TRUE(map.super_index_of(std::string(kNormalPlay)));
  EXPECT_EQ(map.fine_classes_of("Normal play").size(), 3u);
}

TEST(SuperClasses, FrowningOnly) {
  Vocabulary vocab(default_gesture_classes());
  std::vector<GestureAnnotation> a{{"Frowning", 0.0, 0.04}};
  const auto fine = derive_normal_play(rasterize_labels(a, vocab, 25.0, 2).matrix);
  const auto sup = map_super_classes(fine, SuperClassMap::defaults());
  ASSERT_EQ(sup.class_count(), 7u);
  for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(sup.at(c, 0), sup.class_names[c] == "Facial Expression");
  EXPECT_TRUE(sup.at(6, 1));
}

TEST(SuperClasses, NoddingAndVibrato) {
  Vocabulary vocab(default_gesture_classes());
  std::vector<GestureAnnotation> a{{"Nodding", 0.0, 0.04}, {"Vibrato", 0.0, 0.04}};
  const auto sup = map_super_classes(derive_normal_play(rasterize_labels(a, vocab, 25.0, 1).matrix),
                                     SuperClassMap::defaults());
  EXPECT_TRUE(sup.at(*sup.class_index("Head related action"), 0));
  EXPECT_TRUE(sup.at(*sup.class_index("Left hand action"), 0));
  EXPECT_FALSE(sup.at(*sup.class_index("Normal play"), 0));
}

TEST(SuperClasses, ResidualFoldsIntoNormalPlay) {
  Vocabulary vocab(default_gesture_classes());
  std::vector<GestureAnnotation> a{{"Physical energy", 0.0, 0.04}};
  const auto sup = map_super_classes(derive_normal_play(rasterize_labels(a, vocab, 25.0, 1).matrix),
                                     SuperClassMap::defaults());
  for (std::size_t c = 0; c < 7; ++c) EXPECT_EQ(sup.at(c, 0), sup.class_names[c] == "Normal play");
}

TEST(SuperClasses, OrOfConstituentsOnRandomMatrices) {
  auto fine_names = default_gesture_classes();
  fine_names.emplace_back(kNormalPlay);
  const auto map = SuperClassMap::defaults();
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    const auto fine = random_matrix(rng, fine_names, 64, 0.1);
    const auto sup = map_super_classes(fine, map);
    for (std::size_t s = 0; s < sup.class_count(); ++s) {
      for (std::size_t t = 0; t < fine.frame_count; ++t) {
        bool any = false;
        for (std::size_t c = 0; c < fine.class_count(); ++c) {
          any = any || (fine.at(c, t) && *map.super_index_of(fine.class_names[c]) == s);
        }
        ASSERT_EQ(sup.at(s, t), any);
      }
    }
  }
}

TEST(SuperClasses, UnmappedClassIsError) {
  FrameLabelMatrix m("v", 25.0, 4, {"Nodding", "Tapping"});
  EXPECT_ERROR_CATEGORY(map_super_classes(m, SuperClassMap::defaults()), validation);
}

TEST(SuperClasses, JsonRoundTrip) {
  const auto map = SuperClassMap::defaults();
  const auto back = SuperClassMap::from_json(map.to_json());
  EXPECT_EQ(back.super_class_names(), map.super_class_names());
  EXPECT_EQ(back.entries(), map.entries());
  EXPECT_ERROR_CATEGORY(SuperClassMap::from_json("{\"a\": 1}"), config);
  EXPECT_ERROR_CATEGORY(SuperClassMap::from_json("{"), parse);
}

TEST(Clips, CountIsFloorOfFramesOver16) {
  for (std::size_t T : {16u, 17u, 31u, 32u, 47u, 48u, 1000u, 12013u}) {
    const auto clips = assemble_clips(FrameLabelMatrix("v", 25.0, T, {"a"}));
    ASSERT_EQ(clips.size(), T / 16) << T;
    for (std::size_t i = 0; i < clips.size(); ++i) ASSERT_EQ(clips.clips[i].start_frame, 16 * i);
  }
  EXPECT_ERROR_CATEGORY(assemble_clips(FrameLabelMatrix("v", 25.0, 15, {"a"})), validation);
}

TEST(Clips, LabelsAreOrAndSmoothed) {
  Rng rng(5);
  const auto m = random_matrix(rng, {"a", "b", "c"}, 16 * 50, 0.05);
  const auto clips = assemble_clips(m);
  for (const auto& clip : clips.clips) {
    for (std::size_t c = 0; c < 3; ++c) {
      bool any = false;
      for (std::size_t i = 0; i < 16; ++i) {
        ASSERT_EQ(clip.frame(i, c), m.at(c, clip.start_frame + i));
        any = any || clip.frame(i, c);
      }
      ASSERT_EQ(clip.binary_labels[c] != 0, any);
      ASSERT_EQ(clip.smoothed_labels[c] == 0.0, !any);
      ASSERT_GE(clip.smoothed_labels[c], 0.0);
      ASSERT_LE(clip.smoothed_labels[c], 1.0);
    }
  }
}

TEST(TemporalSmooth, HandValues) {
  std::vector<std::uint8_t> f(16, 0);
  EXPECT_EQ(temporal_smooth(f, 1)[0], 0.0);
  f[15] = 1;
  EXPECT_NEAR(temporal_smooth(f, 1)[0], 16.0 / 136.0, 1e-15);
  std::fill(f.begin(), f.end(), 0);
  f[0] = 1;
  EXPECT_NEAR(temporal_smooth(f, 1)[0], 1.0 / 136.0, 1e-15);
  std::fill(f.begin(), f.end(), 1);
  EXPECT_DOUBLE_EQ(temporal_smooth(f, 1)[0], 1.0);
}

TEST(TemporalSmooth, StrictlyIncreasingAndPositionDependent) {
  Rng rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::uint8_t> f(16);
    for (auto& v : f) v = rng.uniform() < 0.5;
    const double base = temporal_smooth(f, 1)[0];
    for (std::size_t i = 0; i < 16; ++i) {
      if (f[i]) continue;
      auto g = f;
      g[i] = 1;
      ASSERT_GT(temporal_smooth(g, 1)[0], base);
    }
  }
  std::vector<std::uint8_t> early(16, 0), late(16, 0);
  early[0] = 1;
  late[15] = 1;
  EXPECT_GT(temporal_smooth(late, 1)[0], temporal_smooth(early, 1)[0]);
}

TEST(TemporalSmooth, ClassesAreIndependent) {
  std::vector<std::uint8_t> f(32, 0);  // frame-major, 2 classes
  f[15 * 2 + 1] = 1;
  const auto s = temporal_smooth(f, 2);
  EXPECT_EQ(s[0], 0.0);
  EXPECT_NEAR(s[1], 16.0 / 136.0, 1e-15);
  EXPECT_ERROR_CATEGORY(temporal_smooth(std::vector<std::uint8_t>(31), 2), shape);
}

TEST(Split, HoldoutSizes) {
  auto s = holdout_sizes(750, {});
  EXPECT_EQ(s.train, 600u);
  EXPECT_EQ(s.validation, 75u);
  EXPECT_EQ(s.test, 75u);
  s = holdout_sizes(3446, {});
  EXPECT_EQ(s.train, 2758u);
  EXPECT_EQ(s.validation, 344u);
  EXPECT_EQ(s.test, 344u);
  EXPECT_ERROR_CATEGORY(holdout_sizes(10, {0.5, 0.1, 0.1}), config);
}

TEST(Split, DisjointExhaustiveDeterministic) {
  const auto clips = numbered_clips(750);
  const auto a = split_dataset(clips, {}, 42);
  const auto b = split_dataset(clips, {}, 42);
  const auto c = split_dataset(clips, {}, 43);
  EXPECT_EQ(a.train.size(), 600u);
  EXPECT_EQ(keys(a.train), keys(b.train));
  EXPECT_EQ(keys(a.test), keys(b.test));
  EXPECT_NE(keys(a.test), keys(c.test));
  std::set<std::pair<std::string, std::size_t>> all;
  for (const auto* part : {&a.train, &a.validation, &a.test}) {
    for (const auto& k : keys(*part)) EXPECT_TRUE(all.insert(k).second);
  }
  EXPECT_EQ(all, keys(clips));
  EXPECT_ERROR_CATEGORY(split_dataset(numbered_clips(9), {}, 1), validation);
}

TEST(Split, LeaveOneOut) {
  std::vector<ClipSet> videos{numbered_clips(750, "1"), numbered_clips(661, "2"), numbered_clips(1034, "3"),
                              numbered_clips(982, "4")};
  const auto s = leave_one_out_split(videos, "1", 0.1, 9);
  EXPECT_EQ(s.test.size(), 750u);
  EXPECT_EQ(s.validation.size(), 267u);  // floor(0.1 * 2677)
  EXPECT_EQ(s.train.size(), 2410u);
  for (const auto& c : s.test.clips) EXPECT_EQ(c.video_id, "1");
  for (const auto* part : {&s.train, &s.validation}) {
    for (const auto& c : part->clips) EXPECT_NE(c.video_id, "1");
  }
  EXPECT_ERROR_CATEGORY(leave_one_out_split(videos, "9", 0.1, 9), validation);
}

TEST(Split, LeaveOneOutWithSingleRemainingVideo) {
  std::vector<ClipSet> videos{numbered_clips(100, "a"), numbered_clips(30, "b")};
  const auto s = leave_one_out_split(videos, "b", 0.1, 1);
  EXPECT_EQ(s.test.size(), 30u);
  EXPECT_EQ(s.validation.size(), 10u);
  EXPECT_EQ(s.train.size(), 90u);
}

TEST(Correlation, IdenticalAndComplementaryColumns) {
  FrameLabelMatrix m("v", 25.0, 6, {"a", "b", "c", "d"});
  const std::vector<int> a{1, 0, 1, 1, 0, 0};
  for (std::size_t t = 0; t < 6; ++t) {
    m.set(0, t, a[t]);
    m.set(1, t, a[t]);
    m.set(2, t, !a[t]);
  }
  const auto r = intercorrelation(m);
  EXPECT_NEAR(r.at(0, 1), 1.0, 1e-12);
  EXPECT_NEAR(r.at(0, 2), -1.0, 1e-12);
  EXPECT_EQ(r.at(3, 3), 1.0);
  EXPECT_EQ(r.at(0, 3), 0.0);
  ASSERT_EQ(r.zero_variance.size(), 1u);
  EXPECT_EQ(r.zero_variance[0], "d");
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(r.at(i, j), r.at(j, i));
  }
}

TEST(Correlation, IndependentColumnsNearZero) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto r = intercorrelation(random_matrix(rng, {"a", "b"}, 10000, 0.5));
    EXPECT_LT(std::abs(r.at(0, 1)), 0.05);
  }
}

TEST(Csv, FrameMatrixRoundTrip) {
  Rng rng(2);
  const auto m = random_matrix(rng, {"Eyes closed", "Vibrato"}, 40, 0.3);
  const auto back = frame_matrix_from_csv(to_csv(m), "v");
  EXPECT_EQ(back.class_names, m.class_names);
  EXPECT_EQ(back.values, m.values);
  EXPECT_EQ(back.frame_count, 40u);
  EXPECT_ERROR_CATEGORY(frame_matrix_from_csv("a,b\n1\n", "v"), parse);
  EXPECT_ERROR_CATEGORY(frame_matrix_from_csv("a,b\n1,2\n", "v"), parse);
}

TEST(Counts, OccurrencesAndClips) {
  Vocabulary vocab = two_classes();
  std::vector<GestureAnnotation> a{{"Nodding", 0, 1}, {"nodding", 2, 3}, {"Vibrato", 0, 1}};
  const auto occ = occurrence_counts(a, vocab);
  EXPECT_EQ(occ, (std::vector<std::size_t>{2, 1}));
  const auto m = rasterize_labels(a, vocab, 25.0, 96).matrix;  // 6 clips
  EXPECT_EQ(clip_counts(assemble_clips(m)), (std::vector<std::size_t>{4, 2}));
}
