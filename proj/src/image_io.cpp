#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "blurlab/image.hpp"

namespace blurlab {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

}  // namespace

bool is_image_file(const std::filesystem::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp" ||
         ext == ".tif" || ext == ".tiff";
}

Image load_image(const std::filesystem::path& path) {
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
  if (raw.empty()) throw std::runtime_error("cannot decode image " + path.string());

  double scale = 1.0;
  switch (raw.depth()) {
    case CV_8U: scale = 1.0 / 255.0; break;
    case CV_16U: scale = 1.0 / 65535.0; break;
    case CV_32F:
    case CV_64F: scale = 1.0; break;
    default: throw std::runtime_error("unsupported sample type in " + path.string());
  }
  cv::Mat samples;
  raw.convertTo(samples, CV_64F, scale);

  const int source_channels = samples.channels();
  Image image(3, samples.rows, samples.cols);
  for (int y = 0; y < samples.rows; ++y) {
    const double* row = samples.ptr<double>(y);
    for (int x = 0; x < samples.cols; ++x) {
      const double* px = row + static_cast<std::ptrdiff_t>(x) * source_channels;
      if (source_channels < 3) {
        for (int c = 0; c < 3; ++c) image.at(c, y, x) = px[0];
      } else {
        // OpenCV stores BGR(A).
        image.at(0, y, x) = px[2];
        image.at(1, y, x) = px[1];
        image.at(2, y, x) = px[0];
      }
    }
  }
  return image;
}

void save_image(const std::filesystem::path& path, const Image& image) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw std::invalid_argument("only 1- or 3-channel images can be written");
  }
  const int type = image.channels() == 1 ? CV_8UC1 : CV_8UC3;
  cv::Mat out(image.height(), image.width(), type);
  for (int y = 0; y < image.height(); ++y) {
    auto* row = out.ptr<unsigned char>(y);
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < image.channels(); ++c) {
        const int dst = image.channels() == 1 ? 0 : 2 - c;
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        row[x * image.channels() + dst] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), out)) {
    throw std::runtime_error("cannot write image " + path.string());
  }
}

}  // namespace blurlab
