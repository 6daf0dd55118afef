"""actreach: unlock unreachable Android activities for GUI fuzzers.

Indexes decompiled smali, infers why activities stay unreachable via a
tool-calling model session, validates dynamic-instrumentation plans against
a device abstraction, and plans injected navigation dialogs so an
off-the-shelf explorer can reach previously blocked activities.
"""

__version__ = "0.1.0"
