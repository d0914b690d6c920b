"""Offline extraction scripts bridging video files to signerlab record files."""

from .jobs import ExtractionJob, NoFacesError, VideoUnreadableError, extract_embeddings, extract_pose

__version__ = "0.1.0"
