#ifndef _DVB_FRONTEND_H_
#define _DVB_FRONTEND_H_

struct dvb_diseqc_master_cmd {
	__u8 msg[6];
	__u8 msg_len;
};

#endif
