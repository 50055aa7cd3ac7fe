#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "wfsep/rng.hpp"
#include "wfsep/types.hpp"

namespace wfsep {

/// Pixel coordinates: x runs along columns, y along rows.
struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Ellipse {
    Point center;
    double semi_x = 1.0;
    double semi_y = 1.0;
    double angle_rad = 0.0;

    bool contains(double x, double y) const;
    /// Same centre and orientation with both semi-axes changed by delta.
    Ellipse grown(double delta) const;
    /// Point at parametric angle theta.
    Point at(double theta) const;
};

struct TissueValues {
    double water;   // a.u.
    double fat;     // a.u.
    double r2star;  // 1/s
};

struct TissueTable {
    TissueValues body{0.7, 0.03, 30.0};
    TissueValues myocardium{0.8, 0.02, 30.0};
    TissueValues blood{1.0, 0.0, 20.0};
    TissueValues subcutaneous_fat{0.1, 0.9, 40.0};
};

struct FatLesion {
    Point center;
    double radius = 3.0;
    double pdff = 0.3;
};

struct Hemorrhage {
    Point center;
    double radius = 3.0;
    double r2star = 120.0;
};

/// Second-order field map over normalised coordinates u, v in [-1, 1]
/// (u along columns, v along rows):
///   c0 + c1 u + c2 v + c3 u^2 + c4 u v + c5 v^2   [Hz]
struct OffresPolynomial {
    std::array<double, 6> coeffs{};
    double operator()(double u, double v) const;
};

/// Synthetic torso slice: subcutaneous fat rim, body tissue, a myocardial
/// ring around a blood pool, fat lesions, hemorrhages and a smooth field map.
struct PhantomSpec {
    std::size_t height = 64;
    std::size_t width = 64;
    Ellipse torso{{31.5, 31.5}, 27.0, 22.0, 0.0};
    Ellipse ventricle{{33.0, 30.0}, 6.5, 6.0, 0.0};
    double myocardium_thickness = 4.0;
    bool fat_rim = true;
    double fat_rim_thickness = 2.5;
    std::vector<FatLesion> fat_lesions;
    std::vector<Hemorrhage> hemorrhages;
    OffresPolynomial offres;
    TissueTable tissues;
    double gain = 1.0;  // scales water and fat everywhere
    // Seeded randomisation applied by generate_phantom. Zero disables it.
    double position_jitter = 0.0;  // px, heart and lesions shift together
    double value_jitter = 0.0;     // relative, per tissue and component

    void validate() const;
};

/// The spec after the seeded jitter has been applied (jitter fields zeroed).
PhantomSpec realize_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Pure function of (spec, seed).
ParameterMaps generate_phantom(const PhantomSpec& spec, std::uint64_t seed);

/// Labelled ROIs of a realised phantom: "fat lesion", "hemorrhage", "septum", "background".
std::vector<Roi> phantom_rois(const PhantomSpec& realized);

/// Width of the border frame the background ROI is drawn from.
inline constexpr std::size_t kBackgroundFrame = 8;

/// Ranges for drawing random anatomies.
struct PhantomRanges {
    std::size_t size = 64;
    std::size_t max_fat_lesions = 2;
    std::size_t max_hemorrhages = 1;
    double pdff_min = 0.1, pdff_max = 0.6;
    double hemorrhage_r2_min = 80.0, hemorrhage_r2_max = 200.0;
    double lesion_radius_min = 2.5, lesion_radius_max = 4.0;
    double offres_max_hz = 150.0;
    double gain_min = 0.6, gain_max = 1.4;
    double position_jitter = 1.0;
    double value_jitter = 0.1;
};

PhantomSpec sample_phantom_spec(const PhantomRanges& ranges, Rng& rng);

}  // namespace wfsep
