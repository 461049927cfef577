#pragma once

#include <chrono>
#include <optional>

#include "travel/attitude.hpp"
#include "travel/core.hpp"
#include "travel/spherical_clustering.hpp"
#include "travel/tgf_ground.hpp"

namespace travel {

/// Two-stage segmentation of one frame: ground labelling on the tri-grid
/// field, then clustering of everything that is not terrain.
class Segmenter {
 public:
  explicit Segmenter(PipelineConfig config, unsigned fit_threads = 1)
      : config_(std::move(config)), fit_threads_(fit_threads) {
    config_.validate();
  }

  const PipelineConfig& config() const noexcept { return config_; }

  SegmentationResult run(const PointCloud& input, const std::optional<Pose>& pose = std::nullopt) const {
    using Clock = std::chrono::steady_clock;
    const auto ms = [](Clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };

    SegmentationResult out;
    const auto t0 = Clock::now();
    std::optional<PointCloud> aligned;
    if (pose) aligned = align_attitude(input, *pose);
    const PointCloud& cloud = aligned ? *aligned : input;
    const auto t1 = Clock::now();

    auto ground = segment_ground(cloud, config_, fit_threads_);
    out.terrain_mask = std::move(ground.terrain_mask);
    const auto t2 = Clock::now();

    std::vector<std::uint8_t> obstacle(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) obstacle[i] = out.terrain_mask[i] ? 0 : 1;
    auto clusters = cluster_objects(cloud, obstacle, config_);
    out.cluster_id = std::move(clusters.cluster_id);
    out.cluster_count = clusters.cluster_count;
    const auto t3 = Clock::now();

    out.timings.align_ms = ms(t1 - t0);
    out.timings.ground_ms = ms(t2 - t1);
    out.timings.cluster_ms = ms(t3 - t2);
    out.timings.total_ms = ms(t3 - t0);
    return out;
  }

 private:
  PipelineConfig config_;
  unsigned fit_threads_;
};

inline SegmentationResult segment(const PointCloud& cloud, const PipelineConfig& config,
                                  const std::optional<Pose>& pose = std::nullopt) {
  return Segmenter(config).run(cloud, pose);
}

}  // namespace travel
