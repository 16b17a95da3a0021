#pragma once

#include "ocular/geom.hpp"
#include "ocular/image.hpp"

namespace ocular {

/// One synchronised camera frame.
struct Frame {
  View view = View::A;
  int index = 0;
  double timestamp_us = 0.0;
  GrayImage image;
  double pitch = 1.0;  ///< micrometres per pixel
};

}  // namespace ocular
