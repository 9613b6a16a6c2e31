"""Dataset parsing, synchronization, normalization and synthetic houses."""

from nilmkit.ingest.normalize import (
    NormStats,
    compute_norm_stats,
    denormalize,
    normalize,
    read_norm_stats,
    write_norm_stats,
)
from nilmkit.ingest.redd import ReddHouse, parse_redd_house
from nilmkit.ingest.refit import RefitHouse, parse_refit_house
from nilmkit.ingest.site import (
    SITE_CLASSES,
    SiteFile,
    build_site_file,
    label_site_classes,
    read_site_csv,
    site_class_indices,
    write_site_csv,
)
from nilmkit.ingest.sync import (
    AppliancePairFile,
    SyncedHouse,
    build_appliance_pair_file,
    read_pair_csv,
    synchronize_house,
    write_pair_csv,
    write_synced_csv,
)
from nilmkit.ingest.synth import (
    SYNTH_PRESETS,
    SynthAppliance,
    SynthConfig,
    load_synth_config,
    synth_config_from_dict,
    synth_generate,
    synth_site_generate,
)
from nilmkit.ingest.timeseries import ParseReport, TimeSeries
