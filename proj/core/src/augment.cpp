#include "vigil/augment.hpp"

#include <cmath>

#include "vigil/rng.hpp"
#include "vigil/transforms.hpp"

namespace vigil {

namespace {

constexpr double kPi = 3.14159265358979323846;

AugmentRange parse_range(const ConfigDoc& doc, const std::string& key) {
  const std::string* v = doc.find(key);
  if (!v) return {};
  const size_t comma = v->find(',');
  if (comma == std::string::npos)
    throw ParseError("augment policy " + key + ": expected `min,max`, got \"" +
                     *v + "\"");
  AugmentRange r;
  r.lo = parse_double(v->substr(0, comma), key + " min");
  r.hi = parse_double(v->substr(comma + 1), key + " max");
  if (r.lo > r.hi)
    throw ConfigError("augment policy " + key + ": min " + format_double(r.lo) +
                      " exceeds max " + format_double(r.hi));
  return r;
}

std::string range_value(const AugmentRange& r) {
  return format_double(r.lo) + "," + format_double(r.hi);
}

}  // namespace

bool AugmentPolicy::identity() const {
  return rot_deg.zero() && shear_x.zero() && scale.zero() && trans_px.zero() &&
         brightness.zero() && crop_frac.zero();
}

void AugmentPolicy::validate() const {
  if (scale.lo <= -1.0)
    throw ConfigError("augment policy scale: delta must stay above -1 "
                      "(factor must be positive)");
  if (crop_frac.lo < 0.0 || crop_frac.hi >= 1.0)
    throw ConfigError("augment policy crop_frac: range must lie in [0, 1)");
}

AugmentPolicy AugmentPolicy::from_config(const ConfigDoc& doc) {
  AugmentPolicy p;
  p.rot_deg = parse_range(doc, "rot_deg");
  p.shear_x = parse_range(doc, "shear_x");
  p.scale = parse_range(doc, "scale");
  p.trans_px = parse_range(doc, "trans_px");
  p.brightness = parse_range(doc, "brightness");
  p.crop_frac = parse_range(doc, "crop_frac");
  p.validate();
  return p;
}

AugmentPolicy AugmentPolicy::load(const std::string& path) {
  return from_config(ConfigDoc::load(path));
}

std::string AugmentPolicy::to_config() const {
  ConfigDoc doc;
  doc.add("rot_deg", range_value(rot_deg));
  doc.add("shear_x", range_value(shear_x));
  doc.add("scale", range_value(scale));
  doc.add("trans_px", range_value(trans_px));
  doc.add("brightness", range_value(brightness));
  doc.add("crop_frac", range_value(crop_frac));
  return doc.serialize();
}

Image augment_sample(const Image& img, const AugmentPolicy& policy,
                     uint64_t seed) {
  policy.validate();
  Rng rng(seed);

  // Fixed draw order keeps the stream stable no matter which knobs are zero.
  const double rot = rng.uniform_double(policy.rot_deg.lo, policy.rot_deg.hi);
  const double shear = rng.uniform_double(policy.shear_x.lo, policy.shear_x.hi);
  const double scale_d = rng.uniform_double(policy.scale.lo, policy.scale.hi);
  const double dx = rng.uniform_double(policy.trans_px.lo, policy.trans_px.hi);
  const double dy = rng.uniform_double(policy.trans_px.lo, policy.trans_px.hi);
  const double bright = rng.uniform_double(policy.brightness.lo, policy.brightness.hi);
  const double crop = rng.uniform_double(policy.crop_frac.lo, policy.crop_frac.hi);

  Image out = img;
  const double cx = img.width * 0.5;
  const double cy = img.height * 0.5;

  if (rot != 0.0 || shear != 0.0 || scale_d != 0.0 || dx != 0.0 || dy != 0.0) {
    AffineMap map = AffineMap::rotation(rot * kPi / 180.0, cx, cy);
    map = compose(map, AffineMap::scale(1.0 + scale_d, cx, cy));
    map = compose(map, AffineMap::shear_x(shear, cy));
    map = compose(map, AffineMap::translation(dx, dy));
    out = affine_transform(out, map, 0);
  }

  if (crop > 0.0) {
    const int kw = std::max(1, static_cast<int>(std::lround(img.width * (1.0 - crop))));
    const int kh = std::max(1, static_cast<int>(std::lround(img.height * (1.0 - crop))));
    const int rx = (img.width - kw) / 2;
    const int ry = (img.height - kh) / 2;
    out = crop_resize(out, rx, ry, kw, kh, img.width, img.height);
  }

  const int delta = static_cast<int>(std::lround(bright));
  if (delta != 0) out = adjust_brightness(out, delta);

  return out;
}

}  // namespace vigil
