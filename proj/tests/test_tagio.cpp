// Copyright 2026 The pairsync Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "pairsync/errors.hpp"
#include "pairsync/tagio.hpp"
#include "support/oracles.hpp"

using namespace pairsync;

namespace
{

std::string bytes_of(const TagStream & s)
{
  std::ostringstream os(std::ios::binary);
  tagio::write_stream(s, os);
  return os.str();
}

std::string header(char side, std::uint64_t count)
{
  std::string h = "PTG1";
  h += side;
  h += std::string(3, '\0');
  for (int i = 0; i < 8; ++i) {
    h += static_cast<char>((count >> (8 * i)) & 0xff);
  }
  return h;
}

std::string record(std::int64_t v)
{
  std::string r;
  const auto u = static_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) {
    r += static_cast<char>((u >> (8 * i)) & 0xff);
  }
  return r;
}

TagStream parse(const std::string & bytes)
{
  std::istringstream is(bytes, std::ios::binary);
  return tagio::read_stream(is);
}

// Sink that accepts a fixed number of bytes and then fails.
class LimitedBuf : public std::streambuf
{
public:
  explicit LimitedBuf(std::size_t limit) : limit_(limit) {}

protected:
  int_type overflow(int_type ch) override
  {
    if (written_ >= limit_) {
      return traits_type::eof();
    }
    ++written_;
    return ch;
  }
  std::streamsize xsputn(const char *, std::streamsize n) override
  {
    const auto room = static_cast<std::streamsize>(limit_ - written_);
    const auto k = std::min(room, n);
    written_ += static_cast<std::size_t>(k);
    return k;
  }

private:
  std::size_t limit_;
  std::size_t written_ = 0;
};

}  // namespace

TEST(Tagio, EmptyStreamHeaderBytes)
{
  const std::string want("\x50\x54\x47\x31\x41\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00\x00", 16);
  EXPECT_EQ(bytes_of(TagStream(Side::A, {})), want);
}

TEST(Tagio, SingleTagLittleEndian)
{
  const auto b = bytes_of(TagStream(Side::B, {1}));
  ASSERT_EQ(b.size(), 24u);
  EXPECT_EQ(b[4], 'B');
  EXPECT_EQ(b.substr(16), std::string("\x01\x00\x00\x00\x00\x00\x00\x00", 8));
}

TEST(Tagio, RoundTripRandomStreams)
{
  std::mt19937_64 rng(99);
  for (int rep = 0; rep < 5; ++rep) {
    const TagStream s(rep % 2 ? Side::B : Side::A,
                      oracle::random_sorted_tags(rng, 100'000, -kPsPerSecond, 100 * kPsPerSecond));
    const auto bytes = bytes_of(s);
    EXPECT_EQ(bytes.size(), 16u + 8u * s.size());
    EXPECT_EQ(parse(bytes), s);
    EXPECT_EQ(bytes_of(parse(bytes)), bytes);
  }
}

TEST(Tagio, NegativeTagsSurvive)
{
  const TagStream s(Side::A, {-5, -5, 0, 7});
  EXPECT_EQ(parse(bytes_of(s)), s);
}

TEST(Tagio, FileRoundTrip)
{
  const auto path = std::filesystem::temp_directory_path() / "pairsync_tagio_roundtrip.ptag";
  const TagStream s(Side::B, {3, 4, 10'000'000});
  EXPECT_EQ(tagio::write_file(s, path), 40u);
  EXPECT_EQ(std::filesystem::file_size(path), 40u);
  EXPECT_EQ(tagio::read_file(path), s);
  std::filesystem::remove(path);
}

TEST(Tagio, UnsortedRecordsRejectedWithIndex)
{
  try {
    parse(header('A', 2) + record(5) + record(3));
    FAIL() << "expected OrderError";
  } catch (const OrderError & e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Tagio, TruncatedRecordsRejected)
{
  try {
    parse(header('A', 2) + record(8));
    FAIL() << "expected TruncationError";
  } catch (const TruncationError & e) {
    EXPECT_EQ(e.expected_records(), 2u);
    EXPECT_EQ(e.available_records(), 1u);
  }
  EXPECT_THROW(parse(header('A', 1) + record(8).substr(0, 5)), TruncationError);
  EXPECT_THROW(parse("PTG1A\0\0"), FormatError);
}

TEST(Tagio, HeaderValidation)
{
  EXPECT_THROW(parse("XTG1" + header('A', 0).substr(4)), FormatError);
  EXPECT_THROW(parse(header('C', 0)), FormatError);
  std::string reserved = header('A', 0);
  reserved[6] = 1;
  EXPECT_THROW(parse(reserved), FormatError);
}

TEST(Tagio, TrailingBytesRejected)
{
  EXPECT_THROW(parse(header('B', 1) + record(1) + "x"), FormatError);
}

TEST(Tagio, SinkFailureReportsBytesWritten)
{
  LimitedBuf buf(20);
  std::ostream os(&buf);
  try {
    tagio::write_stream(TagStream(Side::A, {1, 2, 3}), os);
    FAIL() << "expected IoError";
  } catch (const IoError & e) {
    EXPECT_LE(e.bytes_written(), 20u);
  }
}

TEST(Tagio, MissingFileIsIoError)
{
  EXPECT_THROW(tagio::read_file("/nonexistent/dir/none.ptag"), IoError);
}
