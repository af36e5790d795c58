#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmhar/core/action.hpp"
#include "mmhar/core/kv_document.hpp"
#include "mmhar/core/types.hpp"
#include "mmhar/ingest/recording.hpp"

namespace mmhar::synth {

using Rng = std::mt19937_64;

// Per-recording style offsets shared by every action of one simulated subject.
struct SubjectStyle {
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
  double flex_deg = 0.0;
  double amplitude_scale = 1.0;
  double frequency_scale = 1.0;
  double theta_offset = 0.0;  // rad
  double z_offset_cm = 0.0;
  Hand hand = Hand::Right;

  // Draws offsets; `spread` scales every jitter range (0 = neutral subject).
  static SubjectStyle draw(Rng& rng, double spread, Hand hand);
};

// How a class modulates its contact over time.
enum class Modulation { None, Pulse, Slide, Circle, Tremor, Static };

struct Contact {
  double theta = 0.0;      // rad around the cylinder axis
  double z_cm = 0.0;       // height above the bottom rim
  double radius_cm = 0.0;
  double depth = 0.0;      // normalized indentation, 0..1
  double shear_theta = 0.0;  // tangential marker drag, rad
  double shear_z_cm = 0.0;
};

// Contact state sampled at `rate_hz`; each sample holds one contact per lobe.
struct ContactProfile {
  ActionClass cls = ActionClass::Idle;
  double duration_s = 0.0;
  double rate_hz = 30.0;
  double radius_cm = 0.0;     // drawn base radius
  double depth = 0.0;         // drawn base depth
  double frequency_hz = 0.0;  // oscillation rate
  Modulation modulation = Modulation::None;
  std::vector<std::vector<Contact>> samples;

  bool empty() const { return samples.empty(); }
  // Nearest sample at local time t (s); empty when the profile is.
  const std::vector<Contact>& at(double t) const;
};

// Numeric mapping of the Table I levels.
double area_radius_cm(Level area);       // S/M/L -> 0.5 / 1.5 / 3.0
double pressure_depth(Level pressure);   // L/M/H -> 0.2 / 0.5 / 0.9
double frequency_hz(Level frequency);    // L/M/H -> 0.5 / 2 / 5
Modulation modulation_of(ActionClass c);

ContactProfile make_contact_profile(ActionClass c, double duration_s, Rng& rng, const SubjectStyle& style = {},
                                    double rate_hz = 30.0);

struct RenderOptions {
  int width = 256;
  int height = 144;
  double marker_sigma_px = 2.5;
  double marker_peak = 200.0;
  double background = 12.0;
  double ring_intensity = 60.0;
  double indent_px = 9.0;      // image shift of a marker under full depth
  double falloff_extra_cm = 1.0;  // elastomer spread added to the contact radius
  double pixel_noise = 0.0;   // std of additive noise, 0 = none
};

// Renders one camera view of the marker field under the given contacts.
TactileFrame render_frame(std::span<const Contact> contacts, const SensorGeometry& g, CameraId cam,
                          const RenderOptions& opt, Micros timestamp, Rng* noise_rng = nullptr);

// Image position and displacement of marker (row, col) for a camera; used by
// probes. Returns false when the marker is not visible from that camera.
bool marker_pixel(std::span<const Contact> contacts, const SensorGeometry& g, CameraId cam, const RenderOptions& opt,
                  int row, int col, PixelPoint& rest, PixelPoint& moved);

struct FramePair {
  std::vector<TactileFrame> top;
  std::vector<TactileFrame> bottom;
};

// Renders the profile on an ideal grid starting at t0.
FramePair render_frames(const ContactProfile& p, const SensorGeometry& g, const RenderOptions& opt, Micros t0 = 0);

// Glove module roles, in module_id order.
enum class Module : std::uint8_t { HandBack, ThumbProximal, ThumbDistal, Index, IndexDistal, Middle, Ring, Little };

struct ImuNoise {
  double accel_g = 0.01;
  double gyro_dps = 0.5;
  double mag_ut = 0.4;
};

// 40 Hz series: samples[k][module] = 9 channels (accel g, gyro dps, mag uT).
struct ImuProfile {
  ActionClass cls = ActionClass::Idle;
  double rate_hz = 40.0;
  double frequency_hz = 0.0;
  std::vector<std::array<std::array<float, kImuChannels>, kImuModules>> samples;
};

ImuProfile make_imu_profile(ActionClass c, double duration_s, Rng& rng, const SubjectStyle& style = {},
                            const ImuNoise& noise = {}, double rate_hz = 40.0);

struct ScriptItem {
  ActionClass cls = ActionClass::Idle;
  double duration_s = 0.0;
};

// Clear-text form: `key = value` settings followed by one `class duration`
// line per item. Keys: seed, gap_s, subject, hand, style_spread, jitter_us,
// start_us, frame_rate_hz, imu_rate_hz, pixel_noise.
struct SynthScript {
  std::vector<ScriptItem> items;
  double gap_s = 0.0;  // Idle inserted before, between and after items
  std::uint64_t seed = 1;
  std::string subject = "synthetic";
  Hand hand = Hand::Right;
  double style_spread = 1.0;
  Micros jitter_us = 1000;  // uniform +- jitter on every timestamp
  Micros start_us = 1'000'000;
  double frame_rate_hz = 30.0;
  double imu_rate_hz = 40.0;
  double pixel_noise = 0.0;

  void validate() const;
  double total_seconds() const;
  static SynthScript parse(const KvDocument& doc);
  KvDocument to_document() const;
};

// Ground-truth timeline implied by the script (Idle during gaps).
LabelStream script_labels(const SynthScript& s);

ingest::Recording gen_recording(const SynthScript& s, const SensorGeometry& g = {}, const RenderOptions& opt = {});

// Script covering `classes` in a seeded random order, each for `action_s`,
// with `gap_s` Idle pauses.
SynthScript make_script(std::span<const ActionClass> classes, double action_s, double gap_s, std::uint64_t seed,
                        bool shuffle = true);

}  // namespace mmhar::synth
