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

#include "pairsync/fft.hpp"

#include <fftw3.h>

#include <memory>
#include <mutex>

#include "pairsync/errors.hpp"

namespace pairsync::fft
{

namespace
{

std::mutex & planner_mutex()
{
  static std::mutex m;
  return m;
}

struct PlanDeleter
{
  void operator()(fftw_plan_s * p) const
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(p);
  }
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FftwFree
{
  void operator()(void * p) const { fftw_free(p); }
};
template <typename T>
using Buffer = std::unique_ptr<T[], FftwFree>;

template <typename T>
Buffer<T> alloc(std::size_t n)
{
  auto * p = static_cast<T *>(fftw_malloc(sizeof(T) * n));
  if (p == nullptr) {
    throw std::bad_alloc();
  }
  return Buffer<T>(p);
}

}  // namespace

std::vector<std::complex<double>> forward(std::span<const double> x)
{
  const std::size_t n = x.size();
  if (n == 0) {
    throw ShapeError("empty transform");
  }
  auto in = alloc<double>(n);
  auto out = alloc<fftw_complex>(n / 2 + 1);
  Plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  std::copy(x.begin(), x.end(), in.get());
  fftw_execute(plan.get());

  std::vector<std::complex<double>> spectrum(n / 2 + 1);
  for (std::size_t i = 0; i < spectrum.size(); ++i) {
    spectrum[i] = {out[i][0], out[i][1]};
  }
  return spectrum;
}

std::vector<double> inverse(std::span<const std::complex<double>> half_spectrum, std::size_t n)
{
  if (n == 0 || half_spectrum.size() != n / 2 + 1) {
    throw ShapeError("half spectrum length does not match n/2 + 1");
  }
  auto in = alloc<fftw_complex>(n / 2 + 1);
  auto out = alloc<double>(n);
  Plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    // c2r destroys its input; the buffer is private so that is fine.
    plan.reset(fftw_plan_dft_c2r_1d(static_cast<int>(n), in.get(), out.get(), FFTW_ESTIMATE));
  }
  for (std::size_t i = 0; i < half_spectrum.size(); ++i) {
    in[i][0] = half_spectrum[i].real();
    in[i][1] = half_spectrum[i].imag();
  }
  fftw_execute(plan.get());

  std::vector<double> x(n);
  const double scale = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = out[i] * scale;
  }
  return x;
}

}  // namespace pairsync::fft
