"""Global size caps, overridable through environment variables."""
import os

MAX_MATRIX_DIM = int(os.environ.get("WOTROLAB_MAX_MATRIX_DIM", "4096"))
MAX_VECTOR_LEN = int(os.environ.get("WOTROLAB_MAX_VECTOR_LEN", str(10**6)))
MAX_FIELD_SIZE = int(os.environ.get("WOTROLAB_MAX_FIELD_SIZE", str(10**6)))
