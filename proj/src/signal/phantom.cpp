#include "wfsep/phantom.hpp"

#include <algorithm>
#include <cmath>

namespace wfsep {

namespace {

enum class Tissue : std::uint8_t { Outside, SubcutaneousFat, Body, Myocardium, Blood };

double normalized(double i, std::size_t n) {
    const double half = (static_cast<double>(n) - 1.0) / 2.0;
    return half > 0.0 ? (i - half) / half : 0.0;
}

Tissue classify(const PhantomSpec& spec, double x, double y) {
    if (!spec.torso.contains(x, y)) return Tissue::Outside;
    if (spec.fat_rim && !spec.torso.grown(-spec.fat_rim_thickness).contains(x, y))
        return Tissue::SubcutaneousFat;
    if (spec.ventricle.contains(x, y)) return Tissue::Blood;
    if (spec.ventricle.grown(spec.myocardium_thickness).contains(x, y)) return Tissue::Myocardium;
    return Tissue::Body;
}

const TissueValues& values_for(const TissueTable& t, Tissue tissue) {
    switch (tissue) {
        case Tissue::SubcutaneousFat: return t.subcutaneous_fat;
        case Tissue::Myocardium: return t.myocardium;
        case Tissue::Blood: return t.blood;
        default: return t.body;
    }
}

bool within(const Point& p, double radius, double x, double y) {
    const double dx = x - p.x, dy = y - p.y;
    return dx * dx + dy * dy <= radius * radius;
}

void check_tissue(const TissueValues& v) {
    for (double x : {v.water, v.fat, v.r2star})
        if (!(x >= 0.0) || !std::isfinite(x)) throw ValidationError("tissue values must be finite and non-negative");
}

double wrap_angle(double a) {
    while (a > kPi) a -= kTwoPi;
    while (a < -kPi) a += kTwoPi;
    return a;
}

}  // namespace

bool Ellipse::contains(double x, double y) const {
    const double dx = x - center.x, dy = y - center.y;
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    const double u = (c * dx + s * dy) / semi_x;
    const double v = (-s * dx + c * dy) / semi_y;
    return u * u + v * v <= 1.0;
}

Ellipse Ellipse::grown(double delta) const {
    Ellipse e = *this;
    e.semi_x = std::max(semi_x + delta, 0.0);
    e.semi_y = std::max(semi_y + delta, 0.0);
    return e;
}

Point Ellipse::at(double theta) const {
    const double c = std::cos(angle_rad), s = std::sin(angle_rad);
    const double u = semi_x * std::cos(theta), v = semi_y * std::sin(theta);
    return {center.x + c * u - s * v, center.y + s * u + c * v};
}

double OffresPolynomial::operator()(double u, double v) const {
    const auto& k = coeffs;
    return k[0] + k[1] * u + k[2] * v + k[3] * u * u + k[4] * u * v + k[5] * v * v;
}

void PhantomSpec::validate() const {
    if (height == 0 || width == 0) throw ValidationError("phantom dimensions must be positive");
    for (const Ellipse* e : {&torso, &ventricle})
        if (!(e->semi_x > 0.0) || !(e->semi_y > 0.0)) throw ValidationError("ellipse axes must be positive");
    if (!(myocardium_thickness >= 0.0) || !(fat_rim_thickness >= 0.0))
        throw ValidationError("ring thicknesses must be non-negative");
    if (!(gain > 0.0) || !std::isfinite(gain)) throw ValidationError("gain must be positive");
    if (!(position_jitter >= 0.0) || !(value_jitter >= 0.0) || value_jitter >= 1.0)
        throw ValidationError("jitter must be non-negative (value jitter below 1)");
    for (const auto* t : {&tissues.body, &tissues.myocardium, &tissues.blood, &tissues.subcutaneous_fat})
        check_tissue(*t);
    for (double c : offres.coeffs)
        if (!std::isfinite(c)) throw ValidationError("offres coefficients must be finite");

    const auto inside = [&](const Point& p) {
        return p.x >= 0.0 && p.y >= 0.0 && p.x <= static_cast<double>(width) - 1.0 &&
               p.y <= static_cast<double>(height) - 1.0 && torso.contains(p.x, p.y);
    };
    for (const auto& l : fat_lesions) {
        if (!(l.radius > 0.0)) throw ValidationError("fat lesion radius must be positive");
        if (!(l.pdff >= 0.0 && l.pdff <= 1.0)) throw ValidationError("fat lesion pdff must lie in [0, 1]");
        if (!inside(l.center)) throw ValidationError("fat lesion centre lies outside the object support");
    }
    for (const auto& h : hemorrhages) {
        if (!(h.radius > 0.0)) throw ValidationError("hemorrhage radius must be positive");
        if (!(h.r2star >= 0.0) || !std::isfinite(h.r2star)) throw ValidationError("hemorrhage r2star must be >= 0");
        if (!inside(h.center)) throw ValidationError("hemorrhage centre lies outside the object support");
    }
}

PhantomSpec realize_phantom(const PhantomSpec& spec, std::uint64_t seed) {
    spec.validate();
    PhantomSpec out = spec;
    Rng rng(seed);
    if (spec.position_jitter > 0.0) {
        const double dx = rng.uniform(-spec.position_jitter, spec.position_jitter);
        const double dy = rng.uniform(-spec.position_jitter, spec.position_jitter);
        out.ventricle.center.x += dx;
        out.ventricle.center.y += dy;
        for (auto& l : out.fat_lesions) l.center = {l.center.x + dx, l.center.y + dy};
        for (auto& h : out.hemorrhages) h.center = {h.center.x + dx, h.center.y + dy};
    }
    if (spec.value_jitter > 0.0) {
        for (auto* t : {&out.tissues.body, &out.tissues.myocardium, &out.tissues.blood,
                        &out.tissues.subcutaneous_fat}) {
            t->water *= 1.0 + rng.uniform(-spec.value_jitter, spec.value_jitter);
            t->fat *= 1.0 + rng.uniform(-spec.value_jitter, spec.value_jitter);
            t->r2star *= 1.0 + rng.uniform(-spec.value_jitter, spec.value_jitter);
        }
    }
    out.position_jitter = 0.0;
    out.value_jitter = 0.0;
    out.validate();
    return out;
}

ParameterMaps generate_phantom(const PhantomSpec& spec, std::uint64_t seed) {
    const PhantomSpec p = realize_phantom(spec, seed);
    ParameterMaps maps(p.height, p.width);
    for (std::size_t r = 0; r < p.height; ++r) {
        for (std::size_t c = 0; c < p.width; ++c) {
            const double x = static_cast<double>(c), y = static_cast<double>(r);
            const Tissue tissue = classify(p, x, y);
            if (tissue == Tissue::Outside) continue;
            const TissueValues& base = values_for(p.tissues, tissue);
            double water = base.water, fat = base.fat, r2 = base.r2star;
            for (const auto& l : p.fat_lesions) {
                if (!within(l.center, l.radius, x, y)) continue;
                if (l.pdff >= 1.0) {
                    fat = water;
                    water = 0.0;
                } else {
                    fat = l.pdff / (1.0 - l.pdff) * water;
                }
            }
            for (const auto& h : p.hemorrhages)
                if (within(h.center, h.radius, x, y)) r2 = h.r2star;
            maps.mask(r, c) = 1;
            maps.water(r, c) = p.gain * water;
            maps.fat(r, c) = p.gain * fat;
            maps.r2star(r, c) = r2;
            maps.offres(r, c) = p.offres(normalized(x, p.width), normalized(y, p.height));
        }
    }
    return maps;
}

std::vector<Roi> phantom_rois(const PhantomSpec& p) {
    const std::size_t H = p.height, W = p.width;
    Grid<std::uint8_t> tissue(H, W);
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c)
            tissue(r, c) = static_cast<std::uint8_t>(classify(p, static_cast<double>(c), static_cast<double>(r)));
    const auto is = [&](std::ptrdiff_t r, std::ptrdiff_t c, Tissue t) {
        return r >= 0 && c >= 0 && r < static_cast<std::ptrdiff_t>(H) && c < static_cast<std::ptrdiff_t>(W) &&
               tissue(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) == static_cast<std::uint8_t>(t);
    };

    std::vector<Roi> rois;
    const auto disc_roi = [&](const Point& centre, double radius, const char* label) {
        Roi roi{Mask(H, W), label};
        const double inner = std::max(radius - 1.0, 1.0);
        for (std::size_t r = 0; r < H; ++r)
            for (std::size_t c = 0; c < W; ++c)
                if (tissue(r, c) != static_cast<std::uint8_t>(Tissue::Outside) &&
                    within(centre, inner, static_cast<double>(c), static_cast<double>(r)))
                    roi.mask(r, c) = 1;
        if (count(roi.mask) > 0) rois.push_back(std::move(roi));
    };
    for (const auto& l : p.fat_lesions) disc_roi(l.center, l.radius, "fat lesion");
    for (const auto& h : p.hemorrhages) disc_roi(h.center, h.radius, "hemorrhage");

    // Septal sector: interior myocardium facing -x, clear of every lesion.
    Roi septum{Mask(H, W), "septum"};
    for (std::size_t r = 0; r < H; ++r) {
        for (std::size_t c = 0; c < W; ++c) {
            const auto ri = static_cast<std::ptrdiff_t>(r), ci = static_cast<std::ptrdiff_t>(c);
            if (!is(ri, ci, Tissue::Myocardium) || !is(ri - 1, ci, Tissue::Myocardium) ||
                !is(ri + 1, ci, Tissue::Myocardium) || !is(ri, ci - 1, Tissue::Myocardium) ||
                !is(ri, ci + 1, Tissue::Myocardium))
                continue;
            const double x = static_cast<double>(c), y = static_cast<double>(r);
            const double angle = std::atan2(y - p.ventricle.center.y, x - p.ventricle.center.x);
            if (std::abs(wrap_angle(angle - kPi)) > 35.0 * kPi / 180.0) continue;
            bool clear = true;
            for (const auto& l : p.fat_lesions) clear = clear && !within(l.center, l.radius + 1.5, x, y);
            for (const auto& h : p.hemorrhages) clear = clear && !within(h.center, h.radius + 1.5, x, y);
            if (clear) septum.mask(r, c) = 1;
        }
    }
    if (count(septum.mask) > 0) rois.push_back(std::move(septum));

    Roi background{Mask(H, W), "background"};
    for (std::size_t r = 0; r < H; ++r)
        for (std::size_t c = 0; c < W; ++c) {
            const bool frame = r < kBackgroundFrame || c < kBackgroundFrame || r + kBackgroundFrame >= H ||
                               c + kBackgroundFrame >= W;
            if (frame && tissue(r, c) == static_cast<std::uint8_t>(Tissue::Outside)) background.mask(r, c) = 1;
        }
    if (count(background.mask) > 0) rois.push_back(std::move(background));
    return rois;
}

PhantomSpec sample_phantom_spec(const PhantomRanges& ranges, Rng& rng) {
    PhantomSpec spec;
    spec.height = spec.width = ranges.size;
    const double scale = static_cast<double>(ranges.size) / 64.0;
    const double mid = (static_cast<double>(ranges.size) - 1.0) / 2.0;

    spec.torso = {{mid + scale * rng.uniform(-2.0, 2.0), mid + scale * rng.uniform(-2.0, 2.0)},
                  scale * rng.uniform(24.0, 28.0), scale * rng.uniform(18.0, 23.0), rng.uniform(-0.3, 0.3)};
    spec.ventricle = {{spec.torso.center.x + scale * rng.uniform(-6.0, 6.0),
                       spec.torso.center.y + scale * rng.uniform(-5.0, 5.0)},
                      scale * rng.uniform(5.0, 7.5), scale * rng.uniform(5.0, 7.5), rng.uniform(-kPi, kPi)};
    spec.myocardium_thickness = scale * rng.uniform(3.5, 5.0);
    spec.fat_rim = true;
    spec.fat_rim_thickness = scale * rng.uniform(2.0, 3.5);
    spec.gain = rng.uniform(ranges.gain_min, ranges.gain_max);
    spec.position_jitter = ranges.position_jitter;
    spec.value_jitter = ranges.value_jitter;

    const Ellipse midline = spec.ventricle.grown(spec.myocardium_thickness / 2.0);
    const std::size_t n_fat = rng.below(ranges.max_fat_lesions + 1);
    for (std::size_t i = 0; i < n_fat; ++i)
        spec.fat_lesions.push_back({midline.at(rng.uniform(-kPi, kPi)),
                                    scale * rng.uniform(ranges.lesion_radius_min, ranges.lesion_radius_max),
                                    rng.uniform(ranges.pdff_min, ranges.pdff_max)});
    const std::size_t n_hem = rng.below(ranges.max_hemorrhages + 1);
    for (std::size_t i = 0; i < n_hem; ++i)
        spec.hemorrhages.push_back({midline.at(rng.uniform(-kPi, kPi)),
                                    scale * rng.uniform(ranges.lesion_radius_min, ranges.lesion_radius_max),
                                    rng.uniform(ranges.hemorrhage_r2_min, ranges.hemorrhage_r2_max)});

    // Field map: random quadratic scaled so its peak over the torso is below the limit.
    OffresPolynomial poly;
    for (auto& k : poly.coeffs) k = rng.uniform(-1.0, 1.0);
    double peak = 0.0;
    for (std::size_t r = 0; r < spec.height; ++r)
        for (std::size_t c = 0; c < spec.width; ++c)
            if (spec.torso.contains(static_cast<double>(c), static_cast<double>(r)))
                peak = std::max(peak, std::abs(poly(normalized(static_cast<double>(c), spec.width),
                                                    normalized(static_cast<double>(r), spec.height))));
    const double target = rng.uniform(0.2, 1.0) * ranges.offres_max_hz;
    for (auto& k : poly.coeffs) k *= peak > 0.0 ? target / peak : 0.0;
    spec.offres = poly;
    return spec;
}

}  // namespace wfsep
