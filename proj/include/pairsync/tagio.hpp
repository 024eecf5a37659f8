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

#ifndef PAIRSYNC_TAGIO_HPP_
#define PAIRSYNC_TAGIO_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "pairsync/timebase.hpp"

namespace pairsync::tagio
{

/*
 * Tag file layout, all integers little-endian:
 *
 *   offset  size  field
 *        0     4  magic "PTG1"
 *        4     1  side, 0x41 ('A') or 0x42 ('B')
 *        5     3  reserved, zero
 *        8     8  record count, unsigned
 *       16  8*n   records, signed 64-bit picoseconds, non-decreasing
 *
 * A file of any size other than 16 + 8*count is rejected.
 */
inline constexpr std::size_t kHeaderSize = 16;
inline constexpr std::size_t kRecordSize = 8;
inline constexpr char kMagic[4] = {'P', 'T', 'G', '1'};

struct TagFileHeader
{
  Side side = Side::A;
  std::uint64_t count = 0;
};

/// Returns bytes written. Throws IoError carrying the bytes written so far.
std::uint64_t write_stream(const TagStream & s, std::ostream & sink);
std::uint64_t write_file(const TagStream & s, const std::filesystem::path & path);

/// Throws FormatError (bad magic/side/reserved, trailing bytes),
/// TruncationError or OrderError. Never repairs.
TagStream read_stream(std::istream & source);
TagStream read_file(const std::filesystem::path & path);

}  // namespace pairsync::tagio

#endif  // PAIRSYNC_TAGIO_HPP_
