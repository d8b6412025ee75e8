"""Physical constants and unit conversions used throughout the package (SI)."""

import math

from scipy import constants as _c

HBAR = _c.hbar  # J s
C_LIGHT = _c.c  # m/s
EV = _c.eV  # J
AMU = 1.66053906660e-27  # kg, fixed by the scenario file format
MPC = 1e6 * _c.parsec  # m

H0_KM_S_MPC = 70.0
H0_DEFAULT = H0_KM_S_MPC * 1e3 / MPC  # rad/s, ~2.27e-18

TWO_PI = 2.0 * math.pi


def amu_to_kg(m_amu):
    return m_amu * AMU


def kg_to_amu(m_kg):
    return m_kg / AMU


def ev_to_joule(e_ev):
    return e_ev * EV


def hubble_rate(h0_km_s_mpc):
    """Convert a Hubble constant in km/s/Mpc to a rate in rad/s."""
    return h0_km_s_mpc * 1e3 / MPC
