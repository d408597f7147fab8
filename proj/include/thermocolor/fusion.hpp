#pragma once

// Luminance blending of a predicted color mask with the thermal image.

#include <cstddef>

#include "thermocolor/errors.hpp"
#include "thermocolor/image.hpp"

namespace thermocolor {

/// Mean of mask luminance and thermal intensity, both on [0, 255].
inline double fused_luminance(double mask_l, double thermal) { return (mask_l + thermal) / 2.0; }

/// Averages the mask's L plane with the thermal plane; a and b are copied
/// through unchanged. `thermal` must already match the mask dimensions.
inline LabImage fuse_lab(const LabImage& mask, const GrayImage& thermal) {
    if (thermal.width() != mask.width || thermal.height() != mask.height)
        throw ShapeError("fusion: thermal " + std::to_string(thermal.width()) + "x" +
                         std::to_string(thermal.height()) + " does not match mask " + std::to_string(mask.width) +
                         "x" + std::to_string(mask.height));
    LabImage out = mask;
    const auto t = thermal.data();
    for (std::size_t i = 0; i < out.l.size(); ++i) out.l[i] = fused_luminance(mask.l[i], t[i]);
    return out;
}

/// Cross-domain colorized image: the mask's chrominance carried on a
/// luminance that is half mask, half thermal. The thermal image is resized
/// to the mask size when they differ.
inline RgbImage fuse(const RgbImage& mask, const GrayImage& thermal) {
    const GrayImage t = (thermal.width() == mask.width() && thermal.height() == mask.height())
                            ? thermal
                            : resize_bilinear(thermal, mask.width(), mask.height());
    return lab_to_rgb(fuse_lab(rgb_to_lab(mask), t));
}

} // namespace thermocolor
