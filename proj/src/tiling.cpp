#include "blackbandit/tiling.hpp"

#include "blackbandit/errors.hpp"

#include <string>

namespace bb {

namespace {

std::string dims(const ImageShape& s) {
  return std::to_string(s.height) + "x" + std::to_string(s.width) + "x" + std::to_string(s.channels);
}

ImageShape padded_shape(const ImageShape& image, std::size_t tile) {
  if (tile == 0) throw InvalidArgument("tile side must be >= 1");
  auto up = [tile](std::size_t n) { return (n + tile - 1) / tile * tile; };
  return {up(image.height), up(image.width), image.channels};
}

}  // namespace

TilingSpec::TilingSpec(std::size_t tile, ImageShape image) : tile_(tile), image_(image) {
  if (tile_ == 0) throw InvalidArgument("tile side must be >= 1");
  if (image_.size() == 0) throw InvalidArgument("tiling needs a non-empty image");
  if (image_.height % tile_ != 0 || image_.width % tile_ != 0) {
    throw InvalidArgument("image " + dims(image_) + " is not divisible by tile " + std::to_string(tile_));
  }
}

ImageShape TilingSpec::latent_shape() const {
  return {image_.height / tile_, image_.width / tile_, image_.channels};
}

Vector downsample(const Vector& image, const TilingSpec& spec) {
  const auto& in = spec.image();
  if (static_cast<std::size_t>(image.size()) != in.size()) {
    throw DimensionMismatch("downsample: vector length " + std::to_string(image.size()) + " != " + dims(in));
  }
  const auto out_shape = spec.latent_shape();
  const std::size_t t = spec.tile();
  // Mean taken relative to each block's top-left pixel, so constant blocks
  // (anything produced by upsample) come back bit-exact.
  Vector anchor(static_cast<Eigen::Index>(out_shape.size()));
  Vector dev = Vector::Zero(anchor.size());
  for (std::size_t h = 0; h < in.height; ++h) {
    for (std::size_t w = 0; w < in.width; ++w) {
      for (std::size_t c = 0; c < in.channels; ++c) {
        const auto o = out_shape.index(h / t, w / t, c);
        const double v = image[in.index(h, w, c)];
        if (h % t == 0 && w % t == 0) anchor[o] = v;
        dev[o] += v - anchor[o];
      }
    }
  }
  return anchor + dev / static_cast<double>(t * t);
}

Vector upsample(const Vector& latent, const TilingSpec& spec) {
  const auto ls = spec.latent_shape();
  if (static_cast<std::size_t>(latent.size()) != ls.size()) {
    throw DimensionMismatch("upsample: latent length " + std::to_string(latent.size()) + " != " + dims(ls));
  }
  const auto& out_shape = spec.image();
  const std::size_t t = spec.tile();
  Vector out(static_cast<Eigen::Index>(out_shape.size()));
  for (std::size_t h = 0; h < out_shape.height; ++h) {
    for (std::size_t w = 0; w < out_shape.width; ++w) {
      for (std::size_t c = 0; c < out_shape.channels; ++c) {
        out[out_shape.index(h, w, c)] = latent[ls.index(h / t, w / t, c)];
      }
    }
  }
  return out;
}

Vector pad_edge(const Vector& image, const ImageShape& from, const ImageShape& to) {
  if (static_cast<std::size_t>(image.size()) != from.size()) throw DimensionMismatch("pad: length != shape");
  if (to.height < from.height || to.width < from.width || to.channels != from.channels) {
    throw InvalidArgument("pad: target " + dims(to) + " smaller than " + dims(from));
  }
  Vector out(static_cast<Eigen::Index>(to.size()));
  for (std::size_t h = 0; h < to.height; ++h) {
    const std::size_t hs = std::min(h, from.height - 1);
    for (std::size_t w = 0; w < to.width; ++w) {
      const std::size_t ws = std::min(w, from.width - 1);
      for (std::size_t c = 0; c < to.channels; ++c) out[to.index(h, w, c)] = image[from.index(hs, ws, c)];
    }
  }
  return out;
}

Vector crop(const Vector& image, const ImageShape& from, const ImageShape& to) {
  if (static_cast<std::size_t>(image.size()) != from.size()) throw DimensionMismatch("crop: length != shape");
  if (to.height > from.height || to.width > from.width || to.channels != from.channels) {
    throw InvalidArgument("crop: target " + dims(to) + " larger than " + dims(from));
  }
  Vector out(static_cast<Eigen::Index>(to.size()));
  for (std::size_t h = 0; h < to.height; ++h) {
    for (std::size_t w = 0; w < to.width; ++w) {
      for (std::size_t c = 0; c < to.channels; ++c) out[to.index(h, w, c)] = image[from.index(h, w, c)];
    }
  }
  return out;
}

PaddedTiling::PaddedTiling(ImageShape image, std::size_t tile)
    : image_(image), grid_(tile, padded_shape(image, tile)) {}

Vector PaddedTiling::to_image(const Vector& latent) const {
  Vector up = upsample(latent, grid_);
  return exact() ? up : crop(up, grid_.image(), image_);
}

Vector PaddedTiling::to_latent(const Vector& image) const {
  return exact() ? downsample(image, grid_) : downsample(pad_edge(image, image_, grid_.image()), grid_);
}

}  // namespace bb
