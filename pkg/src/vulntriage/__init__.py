"""vulntriage: desk-scale vulnerability severity triage pipeline.

Ingests security advisories (CVE JSON 5.x, OSV, CSAF 2.0), derives
four-class severity labels from CVSS base scores, builds versioned
train/test snapshots, trains a from-scratch text classifier, and serves
predictions through a local REST gateway.
"""

__version__ = "0.1.0"
