#
# Module for pattern distribution
#

from patdiv.distribution.distribution_queue import QueuePolicy, DistributionQueue, enqueue, pop_next, extend_queue, queue_status, save_queue, load_queue, queue_to_dict, queue_from_dict
