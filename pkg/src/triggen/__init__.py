"""Trigger-guided, intent-aware data-to-text generation.

A sequence-to-sequence generator that turns structured attribute-value
records into natural-language text.  Two extra conditioning signals steer the
output: an intent label describing the kind of message wanted, and an
optional trigger word the generated sentence should start from.  The decoder
mixes ordinary vocabulary generation with copying tokens straight out of the
input record, which is how rare names, phone numbers, and codes survive
verbatim.

Everything runs on a small numpy-based autodiff kernel; there is no
deep-learning framework dependency.
"""

__version__ = "0.1.0"
