#include "gesturelab/feature_file.hpp"
#include "gesturelab/rng.hpp"
#include "gesturelab/text_io.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cstring>

using namespace gesturelab;
using namespace gesturelab::features;

namespace {

FeatureTable random_table(std::uint64_t seed, std::size_t rows, std::size_t dim, const std::string& video = "v1") {
  Rng rng(seed);
  FeatureTable t;
  t.dim = dim;
  t.metadata["role"] = "video";
  std::vector<double> rec(dim);
  for (std::size_t r = 0; r < rows; ++r) {
    for (auto& v : rec) v = rng.normal();
    t.append({video, r * 16}, rec);
  }
  return t;
}

dataset::ClipSet clips_for(const std::string& video, std::size_t n) {
  dataset::ClipSet s;
  s.class_names = {"a"};
  for (std::size_t i = 0; i < n; ++i) {
    dataset::Clip c;
    c.video_id = video;
    c.start_frame = 16 * i;
    s.clips.push_back(c);
  }
  return s;
}

}  // namespace

TEST(FeatureFile, HeaderLayout) {
  const auto bytes = encode_records(random_table(1, 3, 400));
  ASSERT_EQ(bytes.size(), kHeaderBytes + 3 * 400 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "MGF1");
  std::uint32_t version = 0, dim = 0;
  std::uint64_t count = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&count, bytes.data() + 8, 8);
  std::memcpy(&dim, bytes.data() + 16, 4);
  EXPECT_EQ(version, 1u);  // host is little-endian in this build
  EXPECT_EQ(count, 3u);
  EXPECT_EQ(dim, 400u);
}

TEST(FeatureFile, RoundTripIsBitExact) {
  gesturelab::testing::TempDir dir("mgf");
  const auto t = random_table(2, 5, 400);
  write_feature_file(dir / "v.mgf1", t);
  const auto back = read_feature_file(dir / "v.mgf1", FeatureRole::video);
  EXPECT_EQ(back.dim, 400u);
  EXPECT_EQ(back.keys, t.keys);
  EXPECT_EQ(back.metadata, t.metadata);
  ASSERT_EQ(back.values.size(), t.values.size());
  EXPECT_EQ(std::memcmp(back.values.data(), t.values.data(), t.values.size() * sizeof(float)), 0);
  EXPECT_EQ(text::read_file(sidecar_path(dir / "v.mgf1")).substr(0, 12), "# role=video");
}

TEST(FeatureFile, RoleDimensionMatrix) {
  gesturelab::testing::TempDir dir("mgf_role");
  write_feature_file(dir / "v.mgf1", random_table(3, 2, 400));
  write_feature_file(dir / "a.mgf1", random_table(4, 2, 3024));
  EXPECT_NO_THROW(read_feature_file(dir / "v.mgf1", FeatureRole::video));
  EXPECT_ERROR_CATEGORY(read_feature_file(dir / "v.mgf1", FeatureRole::audio), format);
  EXPECT_NO_THROW(read_feature_file(dir / "a.mgf1", FeatureRole::audio));
  EXPECT_ERROR_CATEGORY(read_feature_file(dir / "a.mgf1", FeatureRole::video), format);
}

TEST(FeatureFile, CorruptionRejected) {
  const auto t = random_table(5, 4, 8);
  const auto rec = encode_records(t);
  const auto idx = encode_sidecar(t);
  EXPECT_ERROR_CATEGORY(decode(rec.substr(0, rec.size() - 1), idx), format);
  EXPECT_ERROR_CATEGORY(decode(rec.substr(0, 10), idx), format);
  EXPECT_ERROR_CATEGORY(decode(rec + "abcd", idx), format);
  auto bad = rec;
  bad[3] = '2';
  EXPECT_ERROR_CATEGORY(decode(bad, idx), format);
  bad = rec;
  bad[4] = 2;
  EXPECT_ERROR_CATEGORY(decode(bad, idx), format);
  EXPECT_ERROR_CATEGORY(decode(rec, "row,video,start\n"), format);
  EXPECT_ERROR_CATEGORY(decode(rec, "row,video_id,start_frame\n0,v1,0\n"), alignment);
  EXPECT_ERROR_CATEGORY(decode(rec, "row,video_id,start_frame\n0,v1\n1,v1,16\n2,v1,32\n3,v1,48\n"), format);
}

TEST(FeatureFile, MergeGatherAndAlignment) {
  const auto a = random_table(6, 3, 4, "a");
  const auto b = random_table(7, 2, 4, "b");
  const std::vector<FeatureTable> parts{a, b};
  const auto m = merge(parts);
  EXPECT_EQ(m.size(), 5u);
  auto clips = clips_for("b", 2);
  clips.clips.push_back(clips_for("a", 1).clips[0]);
  const auto x = gather(m, clips);
  ASSERT_EQ(x.rows(), 3);
  EXPECT_EQ(x(0, 0), static_cast<double>(b.row(0)[0]));
  EXPECT_EQ(x(2, 3), static_cast<double>(a.row(0)[3]));

  EXPECT_NO_THROW(check_alignment(m, clips_for("a", 3)));
  EXPECT_ERROR_CATEGORY(check_alignment(m, clips_for("a", 4)), alignment);
  EXPECT_ERROR_CATEGORY(gather(m, clips_for("c", 1)), alignment);
  const std::vector<FeatureTable> dup{a, a};
  EXPECT_ERROR_CATEGORY(merge(dup), alignment);
  const std::vector<FeatureTable> mixed{a, random_table(8, 1, 5, "z")};
  EXPECT_ERROR_CATEGORY(merge(mixed), format);
}
