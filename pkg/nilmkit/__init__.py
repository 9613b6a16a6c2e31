"""
nilmkit - energy disaggregation toolkit.
Seq2-[3]point disaggregation, site-NILM, appliance signature images and
classification, and appliance behavior summaries on a numpy network engine.
"""

__version__ = "1.0.0"
