"""Two-photon coincidence-rate engine.

The observable is the coincidence rate between a signal and an idler
detector.  For a pump field W prepared before the crystal it depends on the
detector coordinates only through their sum:

* free propagation over a distance Z:  rate = kappa * P * |W(rho_s + rho_i)|^2
  with W propagated to Z at the pump wavenumber, and an optional divergence
  prefactor P = (k_p / Z)^2;
* with an imaging lens (object distance O, image distance I, part of O may
  lie in the pump path and part in the twin path):
  rate = kappa * |W_mask[(O/I) (rho_s + rho_i)]|^2.

For full layouts the engine unfolds the two-arm system into a single
equivalent train acting on the pump: pump-side elements first, then one
twin arm's elements, all free-space distances kept as declared.  Both twin
arms must be identical for this picture to hold.  Twin-side legs propagate
at the pump wavenumber: for identical arms the sum-coordinate amplitude
composes the two arm kernels into exactly the pump-wavenumber kernel over
the plain geometry, which is what makes O = (mask-to-crystal) +
(crystal-to-lens) behave as one object distance.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import PhysicsError, SamplingError, ValidationError
from .field import ScalarField, WaveContext, bilinear_sample
from .propagation import (
    FreeSpace,
    Mask,
    OpticalTrain,
    ThinLens,
    propagate,
    propagate_train,
)
from .field import wire_mask

if TYPE_CHECKING:  # pragma: no cover
    from .scenario import Scenario

MIN_APERTURE_SAMPLES = 5  # samples across the diameter


class UnsupportedAsymmetryError(PhysicsError):
    """Signal and idler twin-side trains differ; the unfolded picture needs
    identical arms."""


@dataclass(frozen=True)
class DetectorSpec:
    """One detector: transverse position, aperture radius (0 = point)."""

    role: str  # "signal" | "idler"
    x_m: float = 0.0
    y_m: float = 0.0
    aperture_radius_m: float = 0.0

    def __post_init__(self):
        if self.role not in ("signal", "idler"):
            raise ValidationError(f"detector role must be signal or idler, got {self.role!r}")
        if self.aperture_radius_m < 0:
            raise ValidationError("aperture radius must be >= 0")

    @property
    def position(self) -> tuple[float, float]:
        return (self.x_m, self.y_m)


@dataclass(frozen=True)
class BiphotonSetup:
    """Pump field at the crystal plus wavenumbers and path geometry.

    Distances (meters): ``crystal_to_detector`` is the common detector
    distance, ``mask_to_crystal`` the pump-side object leg,
    ``crystal_to_lens`` and ``lens_to_detector`` the twin-side legs when a
    lens is present.  Signal/idler wavenumbers are stored but not forced to
    sum to the pump wavenumber.
    """

    pump_at_crystal: ScalarField
    pump_wavenumber: float
    signal_wavenumber: float
    idler_wavenumber: float
    crystal_to_detector: float
    mask_to_crystal: float = 0.0
    crystal_to_lens: float = 0.0
    lens_to_detector: float = 0.0

    def __post_init__(self):
        for name in ("crystal_to_detector", "mask_to_crystal",
                     "crystal_to_lens", "lens_to_detector"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be >= 0")
        for name in ("pump_wavenumber", "signal_wavenumber", "idler_wavenumber"):
            if getattr(self, name) <= 0:
                raise ValidationError(f"{name} must be positive")

    def detector_plane_field(self) -> ScalarField:
        """Pump field propagated to the detector distance (cached)."""
        cached = self.__dict__.get("_detector_field")
        if cached is None:
            ctx = WaveContext(self.pump_wavenumber)
            cached = propagate(self.pump_at_crystal, ctx, self.crystal_to_detector)
            object.__setattr__(self, "_detector_field", cached)
        return cached


def divergence_prefactor(pump_wavenumber: float, distance: float) -> float:
    """Free-propagation divergence loss factor (k_p / Z)^2."""
    if distance <= 0:
        raise ValidationError("divergence prefactor needs a positive distance")
    return (pump_wavenumber / distance) ** 2


def rate_from_intensity(intensity: np.ndarray, pitch: float,
                        sum_coordinate: tuple[float, float],
                        kappa: float = 1.0, prefactor: float = 1.0) -> float:
    """Point coincidence rate from a precomputed |W|^2 map.

    The map is sampled at the detector sum coordinate by bilinear
    interpolation; coordinates outside the window raise OutOfWindowError.
    """
    ux, uy = sum_coordinate
    return kappa * prefactor * bilinear_sample(intensity, pitch, ux, uy)


def coincidence_free(setup: BiphotonSetup,
                     rho_s: tuple[float, float], rho_i: tuple[float, float],
                     include_divergence_prefactor: bool = False,
                     kappa: float = 1.0) -> float:
    """Point coincidence rate for free twin propagation.

    The pump is propagated to the detector distance at the pump wavenumber
    and |W|^2 is read at rho_s + rho_i.  With the prefactor flag the rate
    carries the explicit (k_p / Z)^2 divergence loss.
    """
    if setup.crystal_to_detector <= 0:
        raise ValidationError("crystal_to_detector must be positive")
    w = setup.detector_plane_field()
    pref = 1.0
    if include_divergence_prefactor:
        pref = divergence_prefactor(setup.pump_wavenumber, setup.crystal_to_detector)
    u = (rho_s[0] + rho_i[0], rho_s[1] + rho_i[1])
    return rate_from_intensity(w.intensity(), w.pitch, u, kappa, pref)


def coincidence_imaged(setup: BiphotonSetup, w_at_mask: ScalarField,
                       object_distance: float, image_distance: float,
                       rho_s: tuple[float, float], rho_i: tuple[float, float],
                       kappa: float = 1.0) -> float:
    """Closed-form imaged coincidence rate |W_mask[(O/I)(rho_s + rho_i)]|^2.

    O is the mask-to-lens distance (pump plus twin legs) and I the
    lens-to-detector distance.
    """
    if object_distance <= 0 or image_distance <= 0:
        raise ValidationError("object and image distances must be positive")
    scale = object_distance / image_distance
    u = (scale * (rho_s[0] + rho_i[0]), scale * (rho_s[1] + rho_i[1]))
    return rate_from_intensity(w_at_mask.intensity(), w_at_mask.pitch, u, kappa)


# ---------------------------------------------------------------------------
# Scenario unfolding
# ---------------------------------------------------------------------------

def pump_input_field(scenario: "Scenario") -> ScalarField:
    """Pump Gaussian at the input (mask) plane."""
    from .field import gaussian_beam

    return gaussian_beam(scenario.pump.waist_m, scenario.grid.n, scenario.grid.pitch_m)


def _pump_side_elements(scenario: "Scenario") -> list:
    elements = []
    if scenario.mask.type == "wire":
        elements.append(Mask(wire_mask(scenario.mask.width_m,
                                       scenario.grid.n, scenario.grid.pitch_m)))
    z_crystal = scenario.mask.distance_to_crystal_m
    cursor = 0.0
    for lens in scenario.pump_side_elements:
        if not (0.0 <= lens.position_m <= z_crystal):
            raise ValidationError(
                f"pump-side lens at {lens.position_m:g} m lies outside the "
                f"mask-to-crystal leg of {z_crystal:g} m"
            )
        if lens.position_m < cursor:
            raise ValidationError("pump-side elements must be ordered by position")
        if lens.position_m > cursor:
            elements.append(FreeSpace(lens.position_m - cursor))
            cursor = lens.position_m
        elements.append(ThinLens(lens.focal_m, lens.aperture_radius_m))
    if z_crystal > cursor:
        elements.append(FreeSpace(z_crystal - cursor))
    return elements


def _twin_side_elements(scenario: "Scenario", distance_scale: float) -> list:
    if scenario.twin_side_signal != scenario.twin_side_idler:
        raise UnsupportedAsymmetryError(
            "signal and idler twin-side trains differ; the unfolded "
            "equivalent train requires identical arms"
        )
    z_det = scenario.detectors.distance_from_crystal_m
    elements = []
    cursor = 0.0
    for lens in scenario.twin_side_signal:
        if not (0.0 <= lens.position_m <= z_det):
            raise ValidationError(
                f"twin-side lens at {lens.position_m:g} m lies outside the "
                f"crystal-to-detector leg of {z_det:g} m"
            )
        if lens.position_m < cursor:
            raise ValidationError("twin-side elements must be ordered by position")
        if lens.position_m > cursor:
            elements.append(FreeSpace((lens.position_m - cursor) * distance_scale))
            cursor = lens.position_m
        elements.append(ThinLens(lens.focal_m, lens.aperture_radius_m))
    if z_det > cursor:
        elements.append(FreeSpace((z_det - cursor) * distance_scale))
    return elements


def nondegenerate_distance_scale(scenario: "Scenario", arm: str) -> float:
    """Twin-leg rescale factor k_arm / (k_p / 2) for probing non-degeneracy.

    Returns 1 exactly in the degenerate default where both arms run at half
    the pump wavenumber.
    """
    k_half = 0.5 * 2.0 * np.pi / scenario.pump.wavelength_m
    if arm == "signal":
        k_arm = 2.0 * np.pi / scenario.twin_wavelengths.signal_m
    elif arm == "idler":
        k_arm = 2.0 * np.pi / scenario.twin_wavelengths.idler_m
    else:
        raise ValidationError(f"arm must be signal or idler, got {arm!r}")
    return k_arm / k_half


def unfolded_pump_train(scenario: "Scenario",
                        twin_distance_scale: float = 1.0) -> OpticalTrain:
    """Single equivalent train: pump-side elements then one twin arm.

    ``twin_distance_scale`` rescales twin-side free-space legs; the default
    of 1 is the degenerate model.  All other distances are kept exactly as
    declared.
    """
    return OpticalTrain(tuple(
        _pump_side_elements(scenario) + _twin_side_elements(scenario, twin_distance_scale)
    ))


def divergence_loss_distance(scenario: "Scenario") -> float:
    """Distance over which the twins diverge unchecked.

    Free divergence accrues from the crystal until the first twin-side
    lens; without twin-side lenses it runs the full crystal-to-detector
    distance.
    """
    if scenario.twin_side_signal:
        return scenario.twin_side_signal[0].position_m
    return scenario.detectors.distance_from_crystal_m


def effective_detector_field(scenario: "Scenario",
                             twin_distance_scale: float = 1.0) -> ScalarField:
    """Pump field propagated through the unfolded train to the detectors."""
    ctx = WaveContext.from_wavelength(scenario.pump.wavelength_m)
    train = unfolded_pump_train(scenario, twin_distance_scale)
    return propagate_train(pump_input_field(scenario), ctx, train)


def setup_from_scenario(scenario: "Scenario") -> BiphotonSetup:
    """Low-level setup with the pump propagated to the crystal plane."""
    ctx = WaveContext.from_wavelength(scenario.pump.wavelength_m)
    pump_at_crystal = propagate_train(
        pump_input_field(scenario), ctx, OpticalTrain(tuple(_pump_side_elements(scenario)))
    )
    first_lens = scenario.twin_side_signal[0].position_m if scenario.twin_side_signal else 0.0
    return BiphotonSetup(
        pump_at_crystal=pump_at_crystal,
        pump_wavenumber=ctx.wavenumber,
        signal_wavenumber=2.0 * np.pi / scenario.twin_wavelengths.signal_m,
        idler_wavenumber=2.0 * np.pi / scenario.twin_wavelengths.idler_m,
        crystal_to_detector=scenario.detectors.distance_from_crystal_m,
        mask_to_crystal=scenario.mask.distance_to_crystal_m,
        crystal_to_lens=first_lens,
        lens_to_detector=(scenario.detectors.distance_from_crystal_m - first_lens
                          if scenario.twin_side_signal else 0.0),
    )


# ---------------------------------------------------------------------------
# Detector scans
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoincidenceProfile:
    """Coincidence rate versus the scanned detector coordinate."""

    coordinates: np.ndarray
    rates: np.ndarray
    moving: str = "signal"
    axis: str = "x"
    fixed_position: tuple[float, float] = (0.0, 0.0)
    scenario_id: str = ""

    def __post_init__(self):
        coords = np.asarray(self.coordinates, dtype=np.float64)
        rates = np.asarray(self.rates, dtype=np.float64)
        coords.setflags(write=False)
        rates.setflags(write=False)
        object.__setattr__(self, "coordinates", coords)
        object.__setattr__(self, "rates", rates)
        if coords.shape != rates.shape or coords.ndim != 1:
            raise ValidationError("profile coordinates and rates must be matching 1D arrays")
        if coords.size >= 2 and not np.all(np.diff(coords) > 0):
            raise ValidationError("profile coordinates must be strictly increasing")
        if rates.size and rates.min() < 0:
            raise ValidationError("profile rates must be non-negative")

    @property
    def peak_rate(self) -> float:
        return float(self.rates.max())


def _disk_kernel_spectrum(n: int, pitch: float, radius: float) -> np.ndarray:
    """FFT of a centered disk indicator times the pixel area (midpoint rule)."""
    x = (np.arange(n) - n // 2) * pitch
    xx, yy = np.meshgrid(x, x)
    disk = (xx**2 + yy**2 <= radius**2).astype(np.float64) * pitch**2
    return np.fft.fft2(np.fft.ifftshift(disk))


def aperture_integrated_map(intensity: np.ndarray, pitch: float,
                            radius_signal: float, radius_idler: float) -> np.ndarray:
    """Convolve the point-rate map with both detector aperture disks.

    Because the rate depends only on the detector coordinate sum, the
    double aperture integral is a convolution of the sum-coordinate map
    with the two disk indicators.
    """
    n = intensity.shape[0]
    for radius in (radius_signal, radius_idler):
        if radius > 0 and 2.0 * radius / pitch < MIN_APERTURE_SAMPLES:
            raise SamplingError(
                f"aperture radius {radius:g} m under-resolved: need at least "
                f"{MIN_APERTURE_SAMPLES} samples across the diameter at pitch {pitch:g} m"
            )
    if radius_signal == 0 and radius_idler == 0:
        return intensity
    spec = np.fft.fft2(intensity)
    if radius_signal > 0:
        spec = spec * _disk_kernel_spectrum(n, pitch, radius_signal)
    if radius_idler > 0:
        spec = spec * _disk_kernel_spectrum(n, pitch, radius_idler)
    out = np.fft.ifft2(spec).real
    return np.maximum(out, 0.0)


def coincidence_rate_map(scenario: "Scenario", kappa: float = 1.0,
                         twin_distance_scale: float = 1.0,
                         apertures: Optional[tuple[float, float]] = None
                         ) -> tuple[np.ndarray, float]:
    """Aperture-integrated coincidence rate over the sum-coordinate grid.

    Returns the 2D rate map and its pitch.  ``apertures`` defaults to the
    scenario's detector radii.
    """
    if apertures is None:
        apertures = (scenario.detectors.signal.aperture_radius_m,
                     scenario.detectors.idler.aperture_radius_m)
    w = effective_detector_field(scenario, twin_distance_scale)
    prefactor = 1.0
    if scenario.include_divergence_prefactor:
        k_p = 2.0 * np.pi / scenario.pump.wavelength_m
        prefactor = divergence_prefactor(k_p, divergence_loss_distance(scenario))
    point_map = kappa * prefactor * w.intensity()
    return aperture_integrated_map(point_map, w.pitch, *apertures), w.pitch


def scan_detector(scenario: "Scenario",
                  moving: Optional[str] = None,
                  axis: Optional[str] = None,
                  scan_range: Optional[tuple[float, float]] = None,
                  step: Optional[float] = None,
                  fixed_other: Optional[DetectorSpec] = None,
                  kappa: float = 1.0,
                  twin_distance_scale: float = 1.0) -> CoincidenceProfile:
    """Scan one detector and integrate the rate over both apertures.

    Arguments default to the scenario's scan block.  Every scan point is an
    independent pure evaluation of one precomputed map, so evaluation order
    cannot change the result.
    """
    moving = moving or scenario.scan.moving
    axis = axis or scenario.scan.axis
    if moving not in ("signal", "idler"):
        raise ValidationError(f"moving detector must be signal or idler, got {moving!r}")
    if axis not in ("x", "y"):
        raise ValidationError(f"scan axis must be x or y, got {axis!r}")
    if scan_range is None:
        scan_range = (scenario.scan.start_m, scenario.scan.stop_m)
    if step is None:
        step = scenario.scan.step_m
    if step <= 0:
        raise ValidationError(f"scan step must be positive, got {step}")

    detectors = {"signal": scenario.detectors.signal, "idler": scenario.detectors.idler}
    moving_spec = detectors[moving]
    fixed = fixed_other if fixed_other is not None else detectors["idler" if moving == "signal" else "signal"]

    rate_map, pitch = coincidence_rate_map(
        scenario, kappa, twin_distance_scale,
        apertures=(moving_spec.aperture_radius_m, fixed.aperture_radius_m),
    )

    start, stop = scan_range
    n_steps = int(np.floor((stop - start) / step + 1e-9))
    coords = start + step * np.arange(n_steps + 1)
    rates = np.empty_like(coords)
    for i, c in enumerate(coords):
        if axis == "x":
            u = (c + fixed.x_m, moving_spec.y_m + fixed.y_m)
        else:
            u = (moving_spec.x_m + fixed.x_m, c + fixed.y_m)
        rates[i] = bilinear_sample(rate_map, pitch, u[0], u[1])
    return CoincidenceProfile(
        coordinates=coords,
        rates=np.maximum(rates, 0.0),
        moving=moving,
        axis=axis,
        fixed_position=fixed.position,
        scenario_id=scenario.name,
    )
