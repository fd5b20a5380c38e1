#pragma once

// Converts optical targets into electrical load: panel emission current,
// OLED forward voltage and the minimum PVDD-PVEE span that keeps the pixel
// drive transistor in saturation.

#include <cmath>

#include "railplan/core.hpp"

namespace railplan {

// Shockley diode with series resistance; the simplest strictly monotone,
// invertible law matching measured OLED characteristics.
struct OledDiodeModel {
  double i_sat_ma = 1e-6;   // saturation current scale
  double n_vt_v = 0.15;     // ideality x thermal voltage
  double r_series_ohm = 0;

  void validate() const {
    if (!(i_sat_ma > 0.0 && n_vt_v > 0.0 && r_series_ohm >= 0.0))
      throw InputError("OLED diode model: i_sat and n_vt must be > 0, r_series >= 0");
  }
};

// The drive TFT reduced to a single scalar: minimum drain headroom that keeps
// the OLED/TFT operating point in the saturation region.
struct TftModel {
  double v_sat_margin_v = 0.0;

  void validate() const {
    if (!(v_sat_margin_v > 0.0))
      throw InputError("TFT model: v_sat_margin must be > 0 V");
  }
};

// Panel emission current for a mode:
//   I = luminance * area * pixel_on_ratio / (efficacy * transmittance * aperture)
// Linear in luminance and pixel-on ratio; inversely proportional to the
// optical-path factors. Zero when the panel is dark.
inline double emission_current_ma(const PanelSpec& panel, const ModeSpec& mode) {
  panel.validate();
  if (mode.luminance_nits < 0.0) throw InputError("luminance must be >= 0");
  if (mode.luminance_nits == 0.0) return 0.0;
  double area_m2 = panel.active_area_mm2 * 1e-6;
  double amps = mode.luminance_nits * area_m2 * mode.pixel_on_ratio /
                (panel.efficacy_cd_per_a * panel.transmittance * panel.emit_area_factor);
  return amps * 1e3;
}

// Forward voltage at a given current: n_vt * ln(i/i_sat + 1) + i * r_series.
// Exactly 0 at i = 0, strictly increasing.
inline double oled_forward_voltage(const OledDiodeModel& model, double i_ma) {
  model.validate();
  if (i_ma < 0.0) throw InputError("diode current must be >= 0");
  return model.n_vt_v * std::log1p(i_ma / model.i_sat_ma) +
         i_ma * 1e-3 * model.r_series_ohm;
}

// Minimum rail span for a given emission current. A configuration satisfies
// the mode iff PVDD - PVEE >= this span.
inline double required_rail_span(const OledDiodeModel& model, const TftModel& tft,
                                 double i_ma) {
  tft.validate();
  return oled_forward_voltage(model, i_ma) + tft.v_sat_margin_v;
}

}  // namespace railplan
