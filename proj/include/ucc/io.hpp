#pragma once

#include "ucc/bags.hpp"
#include "ucc/model.hpp"
#include "ucc/segmentation.hpp"

#include <string>
#include <vector>

namespace ucc {

/// Text pool format: header line "m d K", then m lines of d floats and a
/// trailing integer label. Values written with %.17g so a round trip is
/// value-exact.
InstancePool load_pool(const std::string& path);
void save_pool(const InstancePool& pool, const std::string& path);

/// IDX image/label pair (the classic big-endian layout, magics 0x00000803
/// and 0x00000801). Pixels land in [0,1] as value/255; labels are shifted
/// to 1-based. Malformed input raises FormatError naming the byte offset.
InstancePool load_idx(const std::string& images_path, const std::string& labels_path);

/// Keep only the given 1-based labels, remapped to contiguous 1..K in the
/// order supplied.
InstancePool filter_pool_classes(const InstancePool& pool, const std::vector<int>& keep);

/// Single-image files: "UCCI H W C\n" + H*W*C little-endian doubles;
/// masks "UCCK H W\n" + H*W bytes of {0,1}.
void save_image(const LabeledImage& img, const std::string& pixels_path,
                const std::string& mask_path);
LabeledImage load_image(const std::string& pixels_path, const std::string& mask_path);

/// Checkpoint: magic "UCCM", version, the three nets (dims, activation
/// tags, little-endian 64-bit parameters), KdeConfig, alpha, ucc range and
/// pooling tag. save->load->save is byte-identical.
void save_checkpoint(const UccModel& model, const std::string& path);
UccModel load_checkpoint(const std::string& path);

/// Write-temp-then-rename; every writer above goes through this.
void atomic_write_file(const std::string& path, const std::string& bytes);

}  // namespace ucc
