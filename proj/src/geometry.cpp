#include "gazecast/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace gazecast {

double wrap_angle(double delta_deg) {
    if (!std::isfinite(delta_deg))
        throw std::domain_error("wrap_angle: non-finite input");
    double d = delta_deg;
    if (d > 180.0) d -= 360.0;
    if (d < -180.0) d += 360.0;
    return d;
}

bool pose_valid(const HeadPose& p) {
    return std::isfinite(p.azimuth_deg) && std::isfinite(p.elevation_deg) &&
           p.azimuth_deg >= -180.0 && p.azimuth_deg <= 180.0 &&
           p.elevation_deg >= -90.0 && p.elevation_deg <= 90.0;
}

void validate_pose(const HeadPose& p) {
    if (!pose_valid(p))
        throw std::domain_error("invalid head pose (az=" + std::to_string(p.azimuth_deg) +
                                ", el=" + std::to_string(p.elevation_deg) + ")");
}

GazeOffset gaze_offset(const HeadPose& gt, const HeadPose& hmd_ref) {
    validate_pose(gt);
    validate_pose(hmd_ref);
    return {wrap_angle(gt.azimuth_deg - hmd_ref.azimuth_deg),
            gt.elevation_deg - hmd_ref.elevation_deg};
}

MotionFeatures motion_features(const HeadPose& curr, const HeadPose& prev, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("motion_features: dt must be positive");
    validate_pose(curr);
    validate_pose(prev);
    MotionFeatures m;
    m.d_az = wrap_angle(curr.azimuth_deg - prev.azimuth_deg);
    m.d_el = curr.elevation_deg - prev.elevation_deg;
    m.w_az = m.d_az / dt;
    m.w_el = m.d_el / dt;
    return m;
}

double angular_loss(const GazeOffset& pred, const GazeOffset& truth) {
    double daz = std::abs(wrap_angle(pred.d_az_deg - truth.d_az_deg));
    double del = std::abs(pred.d_el_deg - truth.d_el_deg);
    return 0.5 * (daz + del);
}

double spherical_mse(const GazeOffset& pred, const GazeOffset& truth) {
    double daz = wrap_angle(pred.d_az_deg - truth.d_az_deg);
    double del = pred.d_el_deg - truth.d_el_deg;
    return 0.5 * (daz * daz + del * del);
}

SphericalRmse spherical_rmse(std::span<const GazeOffset> preds,
                             std::span<const GazeOffset> truths) {
    if (preds.empty() || preds.size() != truths.size())
        throw std::domain_error("spherical_rmse: sequences must be equal-length and nonempty");
    double saz = 0.0, sel = 0.0;
    for (size_t i = 0; i < preds.size(); ++i) {
        double daz = wrap_angle(preds[i].d_az_deg - truths[i].d_az_deg);
        double del = preds[i].d_el_deg - truths[i].d_el_deg;
        saz += daz * daz;
        sel += del * del;
    }
    double n = static_cast<double>(preds.size());
    SphericalRmse out;
    out.az = std::sqrt(saz / n);
    out.el = std::sqrt(sel / n);
    out.combined = std::sqrt(0.5 * (saz + sel) / n);
    return out;
}

double clamp_elevation(double el_deg) {
    return std::clamp(el_deg, -90.0, 90.0);
}

}  // namespace gazecast
