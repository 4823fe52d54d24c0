#include "blurlab/deconv.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "fft.hpp"

namespace blurlab {

namespace {

void check_kernel(const KernelGrid& kernel) {
  if (kernel.height < 1 || kernel.width < 1 ||
      kernel.weights.size() != static_cast<std::size_t>(kernel.height) * kernel.width) {
    throw std::invalid_argument("malformed kernel grid");
  }
  if (kernel.height % 2 == 0 || kernel.width % 2 == 0) {
    throw std::invalid_argument("deconvolution needs an odd-sized kernel; pad it first");
  }
  if (kernel.nonzero_count() == 0) throw std::invalid_argument("kernel is all zero");
}

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Closed-form circular Wiener filter on one plane.
void wiener_periodic(const KernelGrid& kernel, int height, int width, double nsr,
                     std::span<const double> in, std::span<double> out) {
  detail::RealFft2d otf(height, width);
  auto k = otf.real();
  std::fill(k.begin(), k.end(), 0.0);
  const int ay = kernel.anchor_row();
  const int ax = kernel.anchor_col();
  for (int i = 0; i < kernel.height; ++i) {
    for (int j = 0; j < kernel.width; ++j) {
      int y = (i - ay) % height;
      int x = (j - ax) % width;
      if (y < 0) y += height;
      if (x < 0) x += width;
      k[static_cast<std::size_t>(y) * width + x] += kernel.at(i, j);
    }
  }
  otf.forward();
  const auto h = otf.spectrum();

  detail::RealFft2d fft(height, width);
  std::copy(in.begin(), in.end(), fft.real().begin());
  fft.forward();
  auto spec = fft.spectrum();
  for (std::size_t i = 0; i < spec.size(); ++i) {
    const double denom = std::norm(h[i]) + nsr;
    spec[i] = denom > 1e-20 ? spec[i] * std::conj(h[i]) / denom : 0.0;
  }
  fft.inverse();
  const auto r = fft.real();
  std::copy(r.begin(), r.end(), out.begin());
}

// Conjugate gradients on (A^T A + nsr I) x = A^T b, from x = 0.
void wiener_cg(const BlurOperator& op, const WienerOptions& opt,
               std::span<const double> b, std::span<double> x) {
  const std::size_t n = b.size();
  std::vector<double> r(n), p(n), ap(n), tmp(n);
  op.apply_adjoint(b, r);
  std::fill(x.begin(), x.end(), 0.0);
  p = r;
  double rs = dot(r, r);
  const double stop = opt.tolerance * opt.tolerance * rs;
  for (int it = 0; it < opt.max_iterations && rs > stop; ++it) {
    op.apply(p, tmp);
    op.apply_adjoint(tmp, ap);
    for (std::size_t i = 0; i < n; ++i) ap[i] += opt.nsr * p[i];
    const double pap = dot(p, ap);
    if (!(pap > 0.0)) break;
    const double alpha = rs / pap;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * ap[i];
    }
    const double rs_next = dot(r, r);
    const double beta = rs_next / rs;
    rs = rs_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
}

}  // namespace

std::vector<KernelGrid> pad_to_odd_square(const KernelGrid& kernel) {
  if (kernel.height < 1 || kernel.width < 1) throw std::invalid_argument("empty kernel");
  const int n = std::max(kernel.height, kernel.width);
  const int oy = (n - kernel.height) / 2;
  const int ox = (n - kernel.width) / 2;
  auto place = [&](int side, int dy, int dx) {
    KernelGrid out(side, side);
    for (int i = 0; i < kernel.height; ++i) {
      for (int j = 0; j < kernel.width; ++j) out.at(oy + dy + i, ox + dx + j) = kernel.at(i, j);
    }
    return out;
  };
  if (n % 2 == 1) return {place(n, 0, 0)};
  return {place(n + 1, 0, 0), place(n + 1, 0, 1), place(n + 1, 1, 0), place(n + 1, 1, 1)};
}

Image wiener_deconvolve(const Image& blurred, const KernelGrid& kernel,
                        const WienerOptions& options) {
  check_kernel(kernel);
  if (!(options.nsr >= 0.0)) throw std::invalid_argument("nsr must be >= 0");
  if (options.max_iterations < 0) throw std::invalid_argument("max_iterations must be >= 0");
  check_finite(blurred);
  const double ksum = kernel.sum();
  if (ksum == 0.0) throw std::invalid_argument("kernel weights sum to zero");

  const int h = blurred.height();
  const int w = blurred.width();
  const BlurOperator op(h, w, kernel, options.boundary);
  Image out(blurred.channels(), h, w);
  const std::vector<double> ones(blurred.plane_size(), 1.0);
  std::vector<double> flat(blurred.plane_size());
  op.apply(ones, flat);
  std::vector<double> residual(blurred.plane_size());

  for (int c = 0; c < blurred.channels(); ++c) {
    const auto b = blurred.plane(c);
    const double m = std::accumulate(b.begin(), b.end(), 0.0) /
                     static_cast<double>(b.size()) / ksum;
    for (std::size_t i = 0; i < b.size(); ++i) residual[i] = b[i] - m * flat[i];
    auto x = out.plane(c);
    if (options.boundary == Boundary::kPeriodic) {
      wiener_periodic(kernel, h, w, options.nsr, residual, x);
    } else {
      wiener_cg(op, options, residual, x);
    }
    for (double& v : x) v += m;
  }
  return out;
}

Image richardson_lucy(const Image& blurred, const KernelGrid& kernel,
                      const RichardsonLucyOptions& options) {
  check_kernel(kernel);
  if (options.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  for (double w : kernel.weights) {
    if (w < 0.0) throw std::invalid_argument("kernel has negative weights");
  }
  check_finite(blurred);
  for (double v : blurred.samples()) {
    if (v < 0.0) throw std::invalid_argument("Richardson-Lucy input has negative samples");
  }
  Image x = blurred;
  if (options.iterations == 0) return x;

  const BlurOperator op(blurred.height(), blurred.width(), kernel, options.boundary);
  const std::size_t n = blurred.plane_size();
  std::vector<double> norm(n), ax(n), ratio(n), corr(n);
  op.apply_adjoint(std::vector<double>(n, 1.0), norm);

  for (int c = 0; c < blurred.channels(); ++c) {
    const auto b = blurred.plane(c);
    auto xc = x.plane(c);
    for (int it = 0; it < options.iterations; ++it) {
      op.apply(xc, ax);
      for (std::size_t i = 0; i < n; ++i) ratio[i] = ax[i] > 0.0 ? b[i] / ax[i] : 0.0;
      op.apply_adjoint(ratio, corr);
      for (std::size_t i = 0; i < n; ++i) {
        xc[i] = norm[i] > 0.0 ? std::max(0.0, xc[i] * corr[i] / norm[i]) : 0.0;
      }
    }
  }
  return x;
}

std::string to_string(DeconvolutionMethod method) {
  return method == DeconvolutionMethod::kWiener ? "wiener" : "rl";
}

DeconvolutionMethod parse_deconvolution_method(std::string_view text) {
  if (text == "wiener") return DeconvolutionMethod::kWiener;
  if (text == "rl" || text == "richardson-lucy") return DeconvolutionMethod::kRichardsonLucy;
  throw std::invalid_argument("unknown deconvolution method '" + std::string(text) + "'");
}

DeblurResult deblur(const Image& blurred, const KernelGrid& kernel,
                    const DeblurOptions& options) {
  if (blurred.empty()) throw std::invalid_argument("cannot deblur an empty image");
  Image input = blurred;
  if (options.method == DeconvolutionMethod::kRichardsonLucy) {
    for (double& v : input.samples()) v = std::max(v, 0.0);
  }
  const std::vector<KernelGrid> padded = pad_to_odd_square(kernel);
  DeblurResult result{Image(blurred.channels(), blurred.height(), blurred.width()), 0};
  for (const KernelGrid& k : padded) {
    const Image part = options.method == DeconvolutionMethod::kWiener
                           ? wiener_deconvolve(input, k, options.wiener)
                           : richardson_lucy(input, k, options.richardson_lucy);
    auto acc = result.image.samples();
    const auto src = part.samples();
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += src[i];
    ++result.deconvolutions;
  }
  const double scale = 1.0 / static_cast<double>(padded.size());
  for (double& v : result.image.samples()) v *= scale;
  return result;
}

}  // namespace blurlab
