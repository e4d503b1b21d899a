#pragma once

#include <span>
#include <vector>

namespace gazecast {

/// HMD (or ground-truth gaze) orientation at one frame, degrees.
/// Azimuth is periodic over 360 and kept in [-180, 180]; elevation is
/// bounded in [-90, 90] and never wraps.
struct HeadPose {
    double azimuth_deg = 0.0;
    double elevation_deg = 0.0;
};

/// Gaze direction relative to a reference headset orientation.
struct GazeOffset {
    double d_az_deg = 0.0;
    double d_el_deg = 0.0;
};

/// Per-frame head motion: angular velocity (deg/s) and angular
/// displacement (deg) in azimuth and elevation.
struct MotionFeatures {
    double w_az = 0.0;
    double w_el = 0.0;
    double d_az = 0.0;
    double d_el = 0.0;
};

struct SphericalRmse {
    double az = 0.0;
    double el = 0.0;
    double combined = 0.0;
};

/// Normalize a degree angle into [-180, 180]. One piecewise application;
/// requires |delta| < 540. Throws std::domain_error on non-finite input.
double wrap_angle(double delta_deg);

bool pose_valid(const HeadPose& p);
void validate_pose(const HeadPose& p);

/// Gaze relative to the headset: azimuth difference is wrapped, elevation
/// difference is plain.
GazeOffset gaze_offset(const HeadPose& gt, const HeadPose& hmd_ref);

/// Backward first-order difference between consecutive poses.
/// Throws std::domain_error when dt <= 0.
MotionFeatures motion_features(const HeadPose& curr, const HeadPose& prev, double dt);

/// Mean absolute angular error (|d_az| + |d_el|) / 2, azimuth wrapped.
double angular_loss(const GazeOffset& pred, const GazeOffset& truth);

/// (d_az^2 + d_el^2) / 2 with the azimuth difference wrapped before squaring.
double spherical_mse(const GazeOffset& pred, const GazeOffset& truth);

/// Per-axis and combined RMSE over paired sequences.
/// combined = sqrt(mean spherical_mse), so combined^2 = (az^2 + el^2) / 2.
SphericalRmse spherical_rmse(std::span<const GazeOffset> preds,
                             std::span<const GazeOffset> truths);

double clamp_elevation(double el_deg);

}  // namespace gazecast
