#pragma once

#include <cstdint>

#include "adt/types.hpp"

namespace adt {

enum class SampleKind { Image, Feature };

/// One input sample. Images store pixels in [0,1], planar by channel:
/// data[(c*height + y)*width + x]. Feature samples are plain vectors.
/// The id is stable across splits and epochs; per-view augmentation seeds and
/// the cross-epoch prediction EMA are keyed by it.
struct Sample {
  SampleKind kind = SampleKind::Feature;
  Vector data;
  int height = 0;
  int width = 0;
  int channels = 0;
  std::int64_t id = -1;

  static Sample feature(Vector values, std::int64_t id = -1) {
    Sample s;
    s.kind = SampleKind::Feature;
    s.data = std::move(values);
    s.id = id;
    return s;
  }

  static Sample image(Vector pixels, int height, int width, int channels,
                      std::int64_t id = -1) {
    Sample s;
    s.kind = SampleKind::Image;
    s.data = std::move(pixels);
    s.height = height;
    s.width = width;
    s.channels = channels;
    s.id = id;
    return s;
  }

  Eigen::Index dim() const { return data.size(); }

  Real& at(int c, int y, int x) {
    return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
  }
  Real at(int c, int y, int x) const {
    return data[(static_cast<Eigen::Index>(c) * height + y) * width + x];
  }
};

}  // namespace adt
