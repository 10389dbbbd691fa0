#include "meshwarp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "meshwarp/error.hpp"
#include "meshwarp/parallel.hpp"

namespace meshwarp {

double psnr(const ImageU8& a, const ImageU8& b) {
  if (!a.same_shape(b)) throw Error("psnr: image shapes differ");
  if (a.empty()) throw Error("psnr: empty images");
  auto da = a.data();
  auto db = b.data();
  std::uint64_t sse = 0;
  for (std::size_t i = 0; i < da.size(); ++i) {
    const std::int64_t d = static_cast<std::int64_t>(da[i]) - db[i];
    sse += static_cast<std::uint64_t>(d * d);
  }
  if (sse == 0) return kPsnrIdentical;
  const double mse = static_cast<double>(sse) / static_cast<double>(da.size());
  return 20.0 * std::log10(255.0) - 10.0 * std::log10(mse);
}

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(size);
  const double c = (size - 1) / 2.0;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-((i - c) * (i - c)) / (2.0 * sigma * sigma));
    sum += k[i];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Valid-region separable filter: output is (w - size + 1) x (h - size + 1).
std::vector<double> filter_valid(const std::vector<double>& src, int w, int h,
                                 const std::vector<double>& k) {
  const int size = static_cast<int>(k.size());
  const int ow = w - size + 1;
  const int oh = h - size + 1;
  std::vector<double> tmp(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < size; ++i) s += k[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < size; ++i) s += k[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

double ssim_channel(const ImageU8& a, const ImageU8& b, int c, const SsimParams& p,
                    const std::vector<double>& kernel) {
  const int w = a.width();
  const int h = a.height();
  const std::size_t n = a.pixel_count();
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (int j = 0; j < h; ++j) {
    for (int i = 0; i < w; ++i) {
      const std::size_t idx = static_cast<std::size_t>(j) * w + i;
      x[idx] = a.at(i, j, c);
      y[idx] = b.at(i, j, c);
      xx[idx] = x[idx] * x[idx];
      yy[idx] = y[idx] * y[idx];
      xy[idx] = x[idx] * y[idx];
    }
  }
  const auto mx = filter_valid(x, w, h, kernel);
  const auto my = filter_valid(y, w, h, kernel);
  const auto mxx = filter_valid(xx, w, h, kernel);
  const auto myy = filter_valid(yy, w, h, kernel);
  const auto mxy = filter_valid(xy, w, h, kernel);
  const double c1 = (p.k1 * p.dynamic_range) * (p.k1 * p.dynamic_range);
  const double c2 = (p.k2 * p.dynamic_range) * (p.k2 * p.dynamic_range);
  std::vector<double> map(mx.size());
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double mu_x = mx[i];
    const double mu_y = my[i];
    const double var_x = mxx[i] - mu_x * mu_x;
    const double var_y = myy[i] - mu_y * mu_y;
    const double cov = mxy[i] - mu_x * mu_y;
    map[i] = ((2.0 * mu_x * mu_y + c1) * (2.0 * cov + c2)) /
             ((mu_x * mu_x + mu_y * mu_y + c1) * (var_x + var_y + c2));
  }
  return mean(map);
}

ImageU8 apply_mask(const ImageU8& image, const ImageU8& mask) {
  ImageU8 out = image;
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (mask.at(x, y) != 0) continue;
      for (int c = 0; c < image.channels(); ++c) out.at(x, y, c) = 0;
    }
  }
  return out;
}

ImageU8 crop(const ImageU8& image, int x0, int y0, int x1, int y1) {
  ImageU8 out(x1 - x0 + 1, y1 - y0 + 1, image.channels());
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      for (int c = 0; c < image.channels(); ++c) out.at(x - x0, y - y0, c) = image.at(x, y, c);
    }
  }
  return out;
}

double evaluate(Metric metric, const ImageU8& a, const ImageU8& b) {
  return metric == Metric::kPsnr ? psnr(a, b) : ssim(a, b);
}

}  // namespace

double ssim(const ImageU8& a, const ImageU8& b, const SsimParams& params) {
  if (!a.same_shape(b)) throw Error("ssim: image shapes differ");
  if (a.width() < params.window || a.height() < params.window) {
    throw Error("ssim: image smaller than the " + std::to_string(params.window) + "px window");
  }
  const auto kernel = gaussian_kernel(params.window, params.sigma);
  double sum = 0.0;
  for (int c = 0; c < a.channels(); ++c) sum += ssim_channel(a, b, c, params, kernel);
  return sum / a.channels();
}

double masked_metric(Metric metric, const ImageU8& a, const ImageU8& b, const ImageU8& mask,
                     MaskMode mode) {
  if (!a.same_shape(b) || !a.same_size(mask) || mask.channels() != 1) {
    throw Error("masked metric: image and mask shapes differ");
  }
  if (mode == MaskMode::kZeroBackground) {
    return evaluate(metric, apply_mask(a, mask), apply_mask(b, mask));
  }
  int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
  for (int y = 0; y < mask.height(); ++y) {
    for (int x = 0; x < mask.width(); ++x) {
      if (mask.at(x, y) == 0) continue;
      x0 = std::min(x0, x);
      y0 = std::min(y0, y);
      x1 = std::max(x1, x);
      y1 = std::max(y1, y);
    }
  }
  if (x1 < 0) throw Error("masked metric: empty mask has no bounding box");
  return evaluate(metric, crop(a, x0, y0, x1, y1), crop(b, x0, y0, x1, y1));
}

double huber(double error) {
  const double e = std::abs(error);
  return e < 1.0 ? 0.5 * e * e : e - 0.5;
}

double huber(std::span<const double> pred, std::span<const double> gt) {
  if (pred.size() != gt.size()) throw Error("huber: size mismatch");
  if (pred.empty()) throw Error("huber: empty input");
  std::vector<double> terms(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) terms[i] = huber(pred[i] - gt[i]);
  return mean(terms);
}

double huber(const ImageF& pred, const ImageF& gt, double scale, double offset) {
  if (!pred.same_shape(gt)) throw Error("huber: image shapes differ");
  std::vector<double> p(pred.data().size());
  std::vector<double> g(gt.data().size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = pred.data()[i] * scale + offset;
    g[i] = gt.data()[i] * scale + offset;
  }
  return huber(p, g);
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double mean(std::span<const double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  return pairwise_sum(values) / static_cast<double>(values.size());
}

MetricReport evaluate_sequence(std::span<const ImageU8> pred, std::span<const ImageU8> gt,
                               std::span<const ImageU8> masks, MaskMode mode) {
  if (pred.size() != gt.size() || pred.size() != masks.size()) {
    throw Error("metrics: prediction, ground-truth, and mask counts differ");
  }
  MetricReport report;
  const std::size_t n = pred.size();
  report.ssim.resize(n);
  report.masked_ssim.resize(n);
  report.psnr.resize(n);
  report.masked_psnr.resize(n);
  parallel_for(n, [&](std::size_t t) {
    report.ssim[t] = ssim(pred[t], gt[t]);
    report.psnr[t] = psnr(pred[t], gt[t]);
    report.masked_ssim[t] = masked_metric(Metric::kSsim, pred[t], gt[t], masks[t], mode);
    report.masked_psnr[t] = masked_metric(Metric::kPsnr, pred[t], gt[t], masks[t], mode);
  });
  return report;
}

namespace {
nlohmann::json number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return nullptr;
  return v;
}
nlohmann::json numbers(const std::vector<double>& values) {
  nlohmann::json arr = nlohmann::json::array();
  for (double v : values) arr.push_back(number(v));
  return arr;
}
}  // namespace

void write_report_json(const std::filesystem::path& path, const MetricReport& report) {
  nlohmann::json j;
  j["frames"] = report.frame_count();
  j["ssim"] = numbers(report.ssim);
  j["masked_ssim"] = numbers(report.masked_ssim);
  j["psnr"] = numbers(report.psnr);
  j["masked_psnr"] = numbers(report.masked_psnr);
  j["mean"] = {{"ssim", number(report.mean_ssim())},
               {"masked_ssim", number(report.mean_masked_ssim())},
               {"psnr", number(report.mean_psnr())},
               {"masked_psnr", number(report.mean_masked_psnr())}};
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace meshwarp
