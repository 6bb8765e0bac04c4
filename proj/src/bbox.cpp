#include "lt3d/bbox.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include <Eigen/Eigenvalues>

#include "lt3d/error.hpp"
#include "lt3d/raster.hpp"

namespace lt3d {

MaskImage rasterize_masks(const Session& session, const Intrinsics& k, const Extrinsics& e, int shot_id, int width,
                          int height) {
  std::vector<RenderItem> items;
  MaskImage mask;
  mask.shot_id = shot_id;
  for (const auto& el : session.elements) {
    items.push_back({&el.shape(), el.model_matrix(), opaque(el.color)});
    mask.colors.emplace(opaque(el.color), el.id);
  }
  mask.image = render(items, k, e, width, height).color;
  return mask;
}

PixelSet extract_pixels(const MaskImage& mask, Rgba color) {
  color = opaque(color);
  if (!mask.colors.count(color)) throw Error(ErrorCode::kInvalidArgument, "color not present in the mask's map");
  PixelSet out;
  for (int row = 0; row < mask.image.height; ++row) {
    for (int col = 0; col < mask.image.width; ++col) {
      if (opaque(mask.image.at(row, col)) == color) out.emplace_back(row, col);
    }
  }
  return out;
}

std::vector<double> rpca_scores(const PixelSet& pixels) {
  const Eigen::Index n = static_cast<Eigen::Index>(pixels.size());
  if (n < 2) return {};
  Eigen::Matrix2Xd z(2, n);
  for (Eigen::Index i = 0; i < n; ++i) z.col(i) = pixels[i].cast<double>();
  const Eigen::Vector2d mean = z.rowwise().mean();
  z.colwise() -= mean;
  const Eigen::Vector2d sd = (z.array().square().rowwise().sum() / double(n)).sqrt();
  if (sd.maxCoeff() == 0.0) return {};
  for (int a = 0; a < 2; ++a) z.row(a) = sd(a) > 0 ? Eigen::RowVectorXd(z.row(a) / sd(a)) : Eigen::RowVectorXd::Zero(n);

  const Eigen::Matrix2d cov = z * z.transpose() / double(n);
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  const double lambda = eig.eigenvalues()(1);
  const Eigen::Vector2d axis = eig.eigenvectors().col(1);
  const Eigen::VectorXd proj = z.transpose() * axis;
  std::vector<double> scores(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) scores[i] = proj(i) * proj(i) / lambda;
  return scores;
}

PixelSet rpca_filter(const PixelSet& pixels, const RpcaConfig& config) {
  const std::vector<double> scores = rpca_scores(pixels);
  if (scores.empty()) return pixels;
  const Eigen::Map<const Eigen::VectorXd> s(scores.data(), static_cast<Eigen::Index>(scores.size()));
  const double mean = s.mean();
  const double sd = std::sqrt((s.array() - mean).square().mean());
  const double gate = mean + config.gate_sigmas * sd;
  PixelSet out;
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (!(scores[i] > gate)) out.push_back(pixels[i]);
  }
  return out.empty() ? pixels : out;
}

std::optional<Rect> min_rect(const PixelSet& pixels) {
  if (pixels.empty()) return std::nullopt;
  Rect r{pixels[0].reverse(), pixels[0].reverse()};
  for (const auto& p : pixels) {
    r.min = r.min.cwiseMin(Eigen::Vector2i(p.y(), p.x()));
    r.max = r.max.cwiseMax(Eigen::Vector2i(p.y(), p.x()));
  }
  return r;
}

Rect scale_rect(const Rect& rect, int mask_width, int mask_height, int image_width, int image_height) {
  const auto lo = [](int c, int from, int to) { return static_cast<int>((static_cast<long long>(c) * to) / from); };
  const auto hi = [&](int c, int from, int to) { return lo(c + 1, from, to) - 1; };
  Rect out;
  out.min = {lo(rect.min.x(), mask_width, image_width), lo(rect.min.y(), mask_height, image_height)};
  out.max = {hi(rect.max.x(), mask_width, image_width), hi(rect.max.y(), mask_height, image_height)};
  out.max = out.max.cwiseMax(out.min);
  return out;
}

bool accept_rect(const Rect& rect, int mask_width, int mask_height) {
  const double area = static_cast<double>(rect.width()) * rect.height() /
                      (static_cast<double>(mask_width) * mask_height) * 100.0;
  const double w = static_cast<double>(rect.width()) / mask_width * 100.0;
  const double h = static_cast<double>(rect.height()) / mask_height * 100.0;
  const double side = std::sqrt(kRectAreaThreshold);
  return area > kRectAreaThreshold && h > side && w > side;
}

std::map<ObjectId, Rect> bbox_from_mask(const MaskImage& mask, int image_width, int image_height,
                                        const RpcaConfig& config) {
  std::map<ObjectId, Rect> out;
  for (const auto& [color, id] : mask.colors) {
    const auto rect = min_rect(rpca_filter(extract_pixels(mask, color), config));
    if (!rect || !accept_rect(*rect, mask.image.width, mask.image.height)) continue;
    out.emplace(id, scale_rect(*rect, mask.image.width, mask.image.height, image_width, image_height));
  }
  return out;
}

std::map<ObjectId, Rect> bbox_for_shot(const Session& session, const Intrinsics& k, const Extrinsics& e,
                                       int shot_id, const RpcaConfig& config) {
  const MaskImage mask = rasterize_masks(session, k, e, shot_id);
  return bbox_from_mask(mask, k.width, k.height, config);
}

AnnotationSet annotate_shots(const Session& session, const Intrinsics& k, const std::map<int, Extrinsics>& shots,
                             unsigned threads, const RpcaConfig& config) {
  validate_session(session);
  std::vector<std::pair<int, const Extrinsics*>> work;
  for (const auto& [id, e] : shots) work.emplace_back(id, &e);
  std::vector<std::map<ObjectId, Rect>> rects(work.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < work.size();) {
      rects[i] = bbox_for_shot(session, k, *work[i].second, work[i].first, config);
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(work.size(), 1)));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::map<ObjectId, const LabelingElement*> by_id;
  for (const auto& el : session.elements) by_id.emplace(el.id, &el);
  AnnotationSet out;
  for (std::size_t i = 0; i < work.size(); ++i) {
    for (const auto& [id, rect] : rects[i]) {
      const LabelingElement& el = *by_id.at(id);
      out.rect2d.emplace(std::pair{work[i].first, id}, Annotation2d{el.class_name, rect, el.color});
    }
  }
  for (const auto& el : session.elements) {
    out.pose3d.emplace(el.id, Annotation3d{el.pose.position, el.pose.rotation, el.color});
  }
  return out;
}

}  // namespace lt3d
