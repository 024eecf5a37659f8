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

#ifndef PAIRSYNC_ERRORS_HPP_
#define PAIRSYNC_ERRORS_HPP_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace pairsync
{

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Bad caller-supplied parameter (range, shape of a config).
class ParameterError : public Error
{
public:
  using Error::Error;
};

/// Result would leave the signed 64-bit picosecond range.
class OverflowError : public Error
{
public:
  using Error::Error;
};

// --- tag file format -------------------------------------------------------

/// Input file is unreadable as a tag file (bad magic, bad header, bad size).
class FormatError : public Error
{
public:
  using Error::Error;
};

class TruncationError : public FormatError
{
public:
  TruncationError(const std::string & what, std::uint64_t expected_records,
                  std::uint64_t available_records)
  : FormatError(what), expected_(expected_records), available_(available_records)
  {
  }
  std::uint64_t expected_records() const { return expected_; }
  std::uint64_t available_records() const { return available_; }

private:
  std::uint64_t expected_;
  std::uint64_t available_;
};

/// Tags are not sorted non-decreasing. index() is the first offending tag.
class OrderError : public FormatError
{
public:
  OrderError(const std::string & what, std::size_t index) : FormatError(what), index_(index) {}
  std::size_t index() const { return index_; }

private:
  std::size_t index_;
};

/// Sink or source failure.
class IoError : public Error
{
public:
  IoError(const std::string & what, std::uint64_t bytes_written = 0)
  : Error(what), bytes_written_(bytes_written)
  {
  }
  std::uint64_t bytes_written() const { return bytes_written_; }

private:
  std::uint64_t bytes_written_;
};

// --- simulator ---------------------------------------------------------------

class CapacityError : public Error
{
public:
  using Error::Error;
};

// --- correlation -------------------------------------------------------------

/// Acquisition span does not tile the circular array an integer number of times.
class UniformityError : public Error
{
public:
  using Error::Error;
};

class ResolutionError : public Error
{
public:
  using Error::Error;
};

class ShapeError : public Error
{
public:
  using Error::Error;
};

class DegenerateBaselineError : public Error
{
public:
  using Error::Error;
};

/// The selected windows are not fully covered by recorded tags.
class CoverageError : public Error
{
public:
  using Error::Error;
};

// --- algorithmic failures (CLI exit code 3) ---------------------------------

class AlgorithmError : public Error
{
public:
  using Error::Error;
};

/// A correlation pass did not reach the significance threshold.
class NoPeakError : public AlgorithmError
{
public:
  NoPeakError(const std::string & what, double best_significance)
  : AlgorithmError(what), best_significance_(best_significance)
  {
  }
  double best_significance() const { return best_significance_; }

private:
  double best_significance_;
};

/// Rebinning reached its resolution cap without a significant peak.
class PeakNotFound : public AlgorithmError
{
public:
  PeakNotFound(const std::string & what, double best_significance, double last_bin_width_ps)
  : AlgorithmError(what),
    best_significance_(best_significance),
    last_bin_width_ps_(last_bin_width_ps)
  {
  }
  double best_significance() const { return best_significance_; }
  double last_bin_width_ps() const { return last_bin_width_ps_; }

private:
  double best_significance_;
  double last_bin_width_ps_;
};

class NonConvergence : public AlgorithmError
{
public:
  using AlgorithmError::AlgorithmError;
};

class SpanTooLong : public AlgorithmError
{
public:
  using AlgorithmError::AlgorithmError;
};

class TooFewCandidates : public AlgorithmError
{
public:
  TooFewCandidates(const std::string & what, std::size_t count)
  : AlgorithmError(what), count_(count)
  {
  }
  std::size_t count() const { return count_; }

private:
  std::size_t count_;
};

}  // namespace pairsync

#endif  // PAIRSYNC_ERRORS_HPP_
