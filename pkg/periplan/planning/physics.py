import json
import math
from enum import Enum
from functools import lru_cache
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.constants import h, pi
from scipy.optimize import brentq
from scipy.special import erfc

from periplan.common import ConfigurationError, PhysicsError, db2lin, lin2db, EPSILON
from periplan.data.filenames import PHY_CONFIG_FILE
from periplan.network.topology import Span


class Modulation(Enum):
    QPSK = 2
    QAM8 = 3
    QAM16 = 4
    QAM32 = 5
    QAM64 = 6

    @property
    def bits_per_symbol(self):
        return self.value

    @property
    def label(self):
        return "QPSK" if self is Modulation.QPSK else f"{2 ** self.value}QAM"

    @staticmethod
    def parse(text: str) -> "Modulation":
        for m in Modulation:
            if m.label.lower() == text.strip().lower() or m.name.lower() == text.strip().lower():
                return m
        raise ConfigurationError(f"unknown modulation format {text!r}")


class PhyConfig:
    """ Physical-layer constants and transceiver catalog settings, read from phy_config.json. """

    def __init__(self, data: dict = None):
        if data is None:
            with open(PHY_CONFIG_FILE, "r") as f:
                data = json.load(f)
        try:
            grid = data.get("grid", {})
            trx = data.get("transceiver", {})
            fiber = data.get("fiber", {})
            self.slot_width = float(grid.get("slot_width_ghz", 12.5))
            self.slot_count = int(grid.get("slot_count", 384))
            self.datarates = [int(d) for d in trx.get("datarates_gbps", range(100, 601, 50))]
            self.modulations = [Modulation.parse(m) for m in trx.get("modulations",
                                                                     ["QPSK", "8QAM", "16QAM", "32QAM", "64QAM"])]
            self.fec_overhead = float(trx.get("fec_overhead", 0.28))
            extra = trx.get("extra_fec_overhead")
            self.extra_fec_overhead = None if extra is None else float(extra)
            self.roll_off = float(trx.get("roll_off", 0.1))
            self.pre_fec_ber = float(trx.get("pre_fec_ber", 2.4e-2))
            self.required_snr_db = {Modulation.parse(k): float(v)
                                    for k, v in (trx.get("required_snr_db") or {}).items()}
            self.margin_db = float(trx.get("margin_db", 0.0))
            self.beta2 = float(fiber.get("beta2_ps2_per_km", 21.7)) * 1e-27
            self.gamma = float(fiber.get("gamma_per_w_per_km", 1.3)) * 1e-3
            self.frequency = float(fiber.get("frequency_thz", 193.4)) * 1e12
        except (TypeError, ValueError, AttributeError) as e:
            raise ConfigurationError(f"invalid physical-layer configuration: {e}")

        if self.slot_width <= 0 or self.slot_count <= 0:
            raise ConfigurationError("slot width and slot count must be positive")
        if not self.datarates or not self.modulations:
            raise ConfigurationError("the transceiver catalog needs at least one datarate and one modulation")

    @staticmethod
    def load(path: str) -> "PhyConfig":
        try:
            with open(path, "r") as f:
                return PhyConfig(json.load(f))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"{path} is not valid JSON: {e}")


DEFAULT_PHY = None  # type: Optional[PhyConfig]


def default_phy() -> PhyConfig:
    global DEFAULT_PHY
    if DEFAULT_PHY is None:
        DEFAULT_PHY = PhyConfig()
    return DEFAULT_PHY


class ChannelConfig(NamedTuple):
    """ One BVT operating point. symbol_rate in GBd, bandwidth in GHz, required_snr in dB. """

    datarate: int
    modulation: Modulation
    symbol_rate: float
    bandwidth: float
    slot_count: int
    required_snr: float
    overhead: float = 0.28

    @property
    def bits_per_symbol(self):
        return self.modulation.bits_per_symbol

    @property
    def name(self):
        return f"{self.datarate}G-{self.modulation.label}"

    def sort_key(self):
        return self.datarate, self.bits_per_symbol, self.overhead


class PathMetrics(NamedTuple):
    span_list: Tuple[Span, ...]
    total_length: float
    eta_nli: float
    ase_power: float
    launch_power: float
    gsnr: float


def _q_function(x):
    return 0.5 * erfc(x / math.sqrt(2))


def bit_error_rate(modulation: Modulation, snr: float) -> float:
    """ Gray-coded BER of square (even bits) or cross (odd bits) QAM at a linear SNR per symbol. """

    m = 2 ** modulation.bits_per_symbol
    if modulation.bits_per_symbol % 2 == 0:
        energy = m - 1
    else:
        energy = 31 * m / 32 - 1
    return (4 / modulation.bits_per_symbol) * (1 - 1 / math.sqrt(m)) * _q_function(math.sqrt(3 * snr / energy))


@lru_cache(maxsize=None)
def required_snr(modulation: Modulation, ber: float = 2.4e-2) -> float:
    """ SNR in dB at which the modulation reaches the given pre-FEC BER. """

    low, high = 1e-3, 1e5
    if bit_error_rate(modulation, low) < ber:
        return lin2db(low)
    return lin2db(brentq(lambda snr: bit_error_rate(modulation, snr) - ber, low, high, xtol=1e-12))


def make_config(datarate: int, modulation: Modulation, phy: PhyConfig = None, overhead: float = None) -> ChannelConfig:
    phy = phy or default_phy()
    overhead = phy.fec_overhead if overhead is None else overhead
    symbol_rate = datarate * (1 + overhead) / (2 * modulation.bits_per_symbol)
    bandwidth = symbol_rate * (1 + phy.roll_off)
    slot_count = int(math.ceil(bandwidth / phy.slot_width - EPSILON))
    snr = phy.required_snr_db.get(modulation)
    if snr is None:
        snr = required_snr(modulation, phy.pre_fec_ber)
    return ChannelConfig(datarate, modulation, symbol_rate, bandwidth, slot_count, snr, overhead)


def generate_configs(phy: PhyConfig = None) -> List[ChannelConfig]:
    """ The {datarate} x {modulation} catalog; a second FEC overhead in the config adds a second copy of it. """

    phy = phy or default_phy()
    overheads = [phy.fec_overhead]
    if phy.extra_fec_overhead is not None and phy.extra_fec_overhead != phy.fec_overhead:
        overheads.append(phy.extra_fec_overhead)
    return [make_config(dr, m, phy, oh) for oh in overheads for dr in phy.datarates for m in phy.modulations]


class _SpanArrays:
    def __init__(self, spans: Sequence[Span]):
        if not spans:
            raise PhysicsError("empty path: no spans to evaluate")
        self.lengths = np.array([s.length for s in spans], dtype=float) * 1e3
        self.loss_db = np.array([s.length * s.loss_coeff for s in spans], dtype=float)
        # power attenuation in 1/m; the field attenuation is half of it
        self.alpha = np.array([s.loss_coeff for s in spans], dtype=float) / (10 * math.log10(math.e)) / 1e3
        self.noise_figure = np.array([s.amp_noise_figure for s in spans], dtype=float)
        self.l_eff = (1 - np.exp(-self.alpha * self.lengths)) / self.alpha
        self.l_eff_asym = 1 / self.alpha


def _baud(config: ChannelConfig) -> float:
    if config.symbol_rate <= 0 or config.bandwidth <= 0:
        raise PhysicsError(f"zero-bandwidth config {config.name}")
    return config.symbol_rate * 1e9


def eta_nli(path_spans: Sequence[Span], config: ChannelConfig, phy: PhyConfig = None) -> float:
    """ Power-independent NLI coefficient in 1/W^2: closed-form single-span GN per span, summed incoherently. """

    phy = phy or default_phy()
    baud = _baud(config)
    arrays = _SpanArrays(path_spans)
    beta2 = abs(phy.beta2)
    arg = pi ** 2 * beta2 * arrays.l_eff_asym * baud ** 2 / 2
    per_span = (8 / 27) * phy.gamma ** 2 * arrays.l_eff ** 2 * np.arcsinh(arg) / \
        (pi * beta2 * baud ** 2 * arrays.l_eff_asym)
    return float(per_span.sum())


def ase_power(path_spans: Sequence[Span], config: ChannelConfig, phy: PhyConfig = None) -> float:
    """ Accumulated ASE power in W, one EDFA per span compensating that span's loss. """

    phy = phy or default_phy()
    baud = _baud(config)
    arrays = _SpanArrays(path_spans)
    gain = db2lin(arrays.loss_db)
    noise_factor = db2lin(arrays.noise_figure)
    return float(((gain - 1) * noise_factor * h * phy.frequency * baud).sum())


def path_metrics(path_spans: Sequence[Span], config: ChannelConfig, phy: PhyConfig = None) -> PathMetrics:
    phy = phy or default_phy()
    eta = eta_nli(path_spans, config, phy)
    p_ase = ase_power(path_spans, config, phy)
    launch = (p_ase / (2 * eta)) ** (1 / 3)
    snr = launch / (p_ase + eta * launch ** 3)
    return PathMetrics(tuple(path_spans), sum(s.length for s in path_spans), eta, p_ase, launch, lin2db(snr))


def gsnr(path_spans: Sequence[Span], config: ChannelConfig, phy: PhyConfig = None) -> float:
    """ GSNR in dB at the per-channel GN-optimal launch power. """

    return path_metrics(path_spans, config, phy).gsnr


def valid_configs(path_spans: Sequence[Span], catalog: List[ChannelConfig] = None, phy: PhyConfig = None,
                  margin_db: float = None) -> List[ChannelConfig]:
    phy = phy or default_phy()
    catalog = generate_configs(phy) if catalog is None else catalog
    margin_db = phy.margin_db if margin_db is None else margin_db
    return [c for c, _ in PathConfigTable(path_spans, catalog, phy, margin_db).options]


class PathConfigTable:
    """ The valid configurations of one path together with their NLI coefficient on that path.

    :type options: list[tuple[ChannelConfig, float]]
    """

    def __init__(self, path_spans: Sequence[Span], catalog: List[ChannelConfig], phy: PhyConfig = None,
                 margin_db: float = None):
        phy = phy or default_phy()
        margin_db = phy.margin_db if margin_db is None else margin_db
        self.options = []
        self.eta_by_config = {}  # type: Dict[ChannelConfig, float]
        if not path_spans:
            return
        for config in catalog:
            metrics = path_metrics(path_spans, config, phy)
            if metrics.gsnr >= config.required_snr + margin_db:
                self.options.append((config, metrics.eta_nli))
                self.eta_by_config[config] = metrics.eta_nli

    def is_valid(self, config: ChannelConfig) -> bool:
        return config in self.eta_by_config

    def eta(self, config: ChannelConfig) -> float:
        return self.eta_by_config[config]

    @property
    def configs(self) -> List[ChannelConfig]:
        return [c for c, _ in self.options]
