#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <vector>

#include "meshwarp/image.hpp"

namespace meshwarp {

/// PSNR of identical images.
inline constexpr double kPsnrIdentical = std::numeric_limits<double>::infinity();

/// 20 log10(255) - 10 log10(MSE), MSE over all channels.
double psnr(const ImageU8& a, const ImageU8& b);

struct SsimParams {
  int window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 255.0;
};

/// Gaussian-windowed SSIM averaged over window centers whose window lies
/// fully inside the image, then over channels.
double ssim(const ImageU8& a, const ImageU8& b, const SsimParams& params = {});

enum class Metric { kPsnr, kSsim };

enum class MaskMode {
  kZeroBackground,  // multiply both images by the mask
  kBoundingBox,     // crop both images to the mask's bounding box
};

/// Evaluates `metric` after restricting both images to the binary mask
/// (non-zero = foreground).
double masked_metric(Metric metric, const ImageU8& a, const ImageU8& b, const ImageU8& mask,
                     MaskMode mode = MaskMode::kZeroBackground);

/// 0.5 e^2 for |e| < 1, |e| - 0.5 otherwise.
double huber(double error);
/// Mean elementwise Huber loss.
double huber(std::span<const double> pred, std::span<const double> gt);
/// Mean Huber loss on pixel values mapped to the generator range:
/// v * scale + offset (default 0..255 -> -1..1).
double huber(const ImageF& pred, const ImageF& gt, double scale = 1.0 / 127.5, double offset = -1.0);

/// Order-fixed pairwise summation.
double pairwise_sum(std::span<const double> values);
double mean(std::span<const double> values);

struct MetricReport {
  std::vector<double> ssim;
  std::vector<double> masked_ssim;
  std::vector<double> psnr;
  std::vector<double> masked_psnr;

  double mean_ssim() const { return mean(ssim); }
  double mean_masked_ssim() const { return mean(masked_ssim); }
  double mean_psnr() const { return mean(psnr); }
  double mean_masked_psnr() const { return mean(masked_psnr); }
  std::size_t frame_count() const { return psnr.size(); }
};

/// Per-frame metrics; frames are evaluated in parallel.
MetricReport evaluate_sequence(std::span<const ImageU8> pred, std::span<const ImageU8> gt,
                               std::span<const ImageU8> masks,
                               MaskMode mode = MaskMode::kZeroBackground);

/// Per-frame arrays and means. +inf PSNR is written as the string "inf".
void write_report_json(const std::filesystem::path& path, const MetricReport& report);

}  // namespace meshwarp
