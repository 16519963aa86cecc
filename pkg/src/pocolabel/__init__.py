"""pocolabel: instance-segmentation labeling toolkit.

Geometry tools for polygon/flood/brush annotation, the extended-COCO "poco"
dataset format, a filesystem-backed multi-user annotation store, clients for
assisted-labeling model services, an HTTP API, and a CLI.
"""

__version__ = "0.1.0"
