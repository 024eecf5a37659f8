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

#include "pairsync/tagio.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pairsync/errors.hpp"

namespace pairsync::tagio
{

namespace
{

void put_u64_le(std::uint64_t v, unsigned char * out)
{
  for (int i = 0; i < 8; ++i) {
    out[i] = static_cast<unsigned char>(v >> (8 * i));
  }
}

std::uint64_t get_u64_le(const unsigned char * in)
{
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) {
    v = (v << 8) | in[i];
  }
  return v;
}

// Records are written in chunks to keep the ostream call count low.
constexpr std::size_t kChunkRecords = 8192;

}  // namespace

std::uint64_t write_stream(const TagStream & s, std::ostream & sink)
{
  std::array<unsigned char, kHeaderSize> header{};
  std::memcpy(header.data(), kMagic, 4);
  header[4] = static_cast<unsigned char>(s.side());
  put_u64_le(s.size(), header.data() + 8);

  std::uint64_t written = 0;
  sink.write(reinterpret_cast<const char *>(header.data()), header.size());
  if (!sink) {
    throw IoError("failed writing tag file header", written);
  }
  written += header.size();

  std::vector<unsigned char> buf(kChunkRecords * kRecordSize);
  const auto tags = s.tags();
  for (std::size_t i = 0; i < tags.size(); i += kChunkRecords) {
    const std::size_t n = std::min(kChunkRecords, tags.size() - i);
    for (std::size_t j = 0; j < n; ++j) {
      put_u64_le(static_cast<std::uint64_t>(tags[i + j]), buf.data() + j * kRecordSize);
    }
    sink.write(reinterpret_cast<const char *>(buf.data()),
               static_cast<std::streamsize>(n * kRecordSize));
    if (!sink) {
      throw IoError("failed writing tag records", written);
    }
    written += n * kRecordSize;
  }
  sink.flush();
  if (!sink) {
    throw IoError("failed flushing tag file", written);
  }
  return written;
}

std::uint64_t write_file(const TagStream & s, const std::filesystem::path & path)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open " + path.string() + " for writing");
  }
  return write_stream(s, out);
}

TagStream read_stream(std::istream & source)
{
  std::array<unsigned char, kHeaderSize> header{};
  source.read(reinterpret_cast<char *>(header.data()), header.size());
  if (source.gcount() != static_cast<std::streamsize>(header.size())) {
    throw FormatError("file shorter than the 16-byte header");
  }
  if (std::memcmp(header.data(), kMagic, 4) != 0) {
    throw FormatError("bad magic, expected PTG1");
  }
  if (header[4] != 0x41 && header[4] != 0x42) {
    throw FormatError("bad side byte");
  }
  if (header[5] != 0 || header[6] != 0 || header[7] != 0) {
    throw FormatError("reserved header bytes are not zero");
  }
  const Side side = static_cast<Side>(header[4]);
  const std::uint64_t count = get_u64_le(header.data() + 8);

  std::vector<Picoseconds> tags;
  std::vector<unsigned char> buf(kChunkRecords * kRecordSize);
  std::uint64_t remaining = count;
  while (remaining > 0) {
    const std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(remaining, kChunkRecords));
    source.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(want * kRecordSize));
    const auto got_bytes = static_cast<std::size_t>(source.gcount());
    const std::size_t got = got_bytes / kRecordSize;
    for (std::size_t j = 0; j < got; ++j) {
      tags.push_back(static_cast<Picoseconds>(get_u64_le(buf.data() + j * kRecordSize)));
    }
    if (got < want) {
      throw TruncationError("record region truncated: header claims " + std::to_string(count) +
                              " records, file holds " + std::to_string(tags.size()),
                            count, tags.size());
    }
    remaining -= want;
  }
  if (source.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after " + std::to_string(count) + " records");
  }

  const auto bad = first_unsorted_index(tags);
  if (bad != tags.size()) {
    throw OrderError("tags not sorted at index " + std::to_string(bad), bad);
  }
  return TagStream(side, std::move(tags));
}

TagStream read_file(const std::filesystem::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return read_stream(in);
}

}  // namespace pairsync::tagio
