#pragma once

// Non-blind deconvolution with the odd/even kernel padding protocol.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "blurlab/blur.hpp"
#include "blurlab/image.hpp"
#include "blurlab/kernel_geometry.hpp"

namespace blurlab {

// Zero-pads the shorter side so the kernel becomes square (offset
// floor((n - side) / 2)). An odd square gives one kernel. An even square of
// side n gives four (n + 1)-sided kernels, the line shifted toward each
// corner. The four are ordered by (row shift, column shift) in
// {(0,0), (0,1), (1,0), (1,1)}; shift (0,0) keeps the original anchor.
std::vector<KernelGrid> pad_to_odd_square(const KernelGrid& kernel);

struct WienerOptions {
  double nsr = 1e-4;
  // Must match the boundary used to blur. Periodic uses the closed-form
  // frequency-domain filter; the others minimize the same objective
  //   |k * x - b|^2 + nsr |x|^2
  // with conjugate gradients on the exact boundary-aware operator.
  Boundary boundary = Boundary::kReflect;
  int max_iterations = 200;
  double tolerance = 1e-10;  // relative residual
};

// Regularized inverse filter. The image mean is carried through
// unregularized, so flat images are restored exactly. Kernel must be
// odd-sized in both dimensions and not all zero.
Image wiener_deconvolve(const Image& blurred, const KernelGrid& kernel,
                        const WienerOptions& options = {});

struct RichardsonLucyOptions {
  int iterations = 30;
  Boundary boundary = Boundary::kReflect;
};

// Multiplicative-update deconvolution. Inputs must be non-negative;
// 0 iterations returns the input.
Image richardson_lucy(const Image& blurred, const KernelGrid& kernel,
                      const RichardsonLucyOptions& options = {});

enum class DeconvolutionMethod { kWiener, kRichardsonLucy };
std::string to_string(DeconvolutionMethod method);
DeconvolutionMethod parse_deconvolution_method(std::string_view text);

struct DeblurOptions {
  DeconvolutionMethod method = DeconvolutionMethod::kWiener;
  WienerOptions wiener;
  RichardsonLucyOptions richardson_lucy;
};

struct DeblurResult {
  Image image;
  std::size_t deconvolutions = 0;
};

// Pads the kernel per pad_to_odd_square, deconvolves with each result and
// averages them. Richardson-Lucy inputs are clamped at zero first.
DeblurResult deblur(const Image& blurred, const KernelGrid& kernel,
                    const DeblurOptions& options = {});

}  // namespace blurlab
