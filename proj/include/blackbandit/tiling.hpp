#pragma once

#include "blackbandit/types.hpp"

namespace bb {

/// Mean-pooling grid with square tiles over an image whose height and width
/// are multiples of the tile side.
class TilingSpec {
 public:
  /// Throws InvalidArgument when tile is 0 or does not divide height/width.
  TilingSpec(std::size_t tile, ImageShape image);

  std::size_t tile() const { return tile_; }
  const ImageShape& image() const { return image_; }
  ImageShape latent_shape() const;
  std::size_t latent_size() const { return latent_shape().size(); }

 private:
  std::size_t tile_;
  ImageShape image_;
};

/// Mean of each tile x tile block, per channel.
Vector downsample(const Vector& image, const TilingSpec& spec);
/// Nearest-neighbour (block replicate) upscale by the tile side.
Vector upsample(const Vector& latent, const TilingSpec& spec);

/// Edge-replicating pad of `image` (shape `from`) to the larger shape `to`.
Vector pad_edge(const Vector& image, const ImageShape& from, const ImageShape& to);
/// Top-left crop of `image` (shape `from`) to the smaller shape `to`.
Vector crop(const Vector& image, const ImageShape& from, const ImageShape& to);

/// Tiling for arbitrary image dims: the grid covers the image padded up to
/// the next multiple of the tile. Equals TilingSpec when dims divide evenly.
class PaddedTiling {
 public:
  PaddedTiling(ImageShape image, std::size_t tile);

  const ImageShape& image() const { return image_; }
  const TilingSpec& grid() const { return grid_; }
  std::size_t tile() const { return grid_.tile(); }
  std::size_t latent_size() const { return grid_.latent_size(); }
  bool exact() const { return grid_.image() == image_; }

  /// crop(upsample(latent))
  Vector to_image(const Vector& latent) const;
  /// downsample(pad_edge(image))
  Vector to_latent(const Vector& image) const;

 private:
  ImageShape image_;
  TilingSpec grid_;
};

}  // namespace bb
