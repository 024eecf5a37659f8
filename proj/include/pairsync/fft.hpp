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

#ifndef PAIRSYNC_FFT_HPP_
#define PAIRSYNC_FFT_HPP_

#include <complex>
#include <span>
#include <vector>

namespace pairsync::fft
{

// Thin FFTW wrappers. Plan creation is serialized internally; execution of
// distinct transforms may run concurrently.

/// Half spectrum (n/2 + 1 bins) of a real sequence of length n.
std::vector<std::complex<double>> forward(std::span<const double> x);

/// Real sequence of length n from its half spectrum, normalized by 1/n so
/// that inverse(forward(x)) == x.
std::vector<double> inverse(std::span<const std::complex<double>> half_spectrum, std::size_t n);

}  // namespace pairsync::fft

#endif  // PAIRSYNC_FFT_HPP_
