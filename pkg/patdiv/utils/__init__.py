#
# Module for utils
#

from patdiv.utils.errors import PatdivError, ValidationError, PatternGenerationError, ProgramMismatchError, QueueExhaustedError, QueueExtensionRequired
from patdiv.utils.named_stage import named_stage
